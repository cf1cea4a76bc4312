#pragma once

#include "ccest/baselines/constraints.hpp"
#include "ccest/baselines/kmeans.hpp"
#include "ccest/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ccest {

struct PcKMeansResult {
    std::vector<int> assignment;
    MatrixF centers;
    // distortion + alpha * must-link violations + beta * cannot-link violations
    double objective = 0.0;
    double distortion = 0.0;
    std::size_t must_link_violations = 0;
    std::size_t cannot_link_violations = 0;
    std::size_t iterations = 0;
    std::vector<double> objective_trace;
};

// Pairwise-constrained k-means. Initialized exactly like a single kmeans
// restart with the same seed; each iteration assigns points one at a time
// in a shuffled order, charging penalties against partners that already
// have a label. With alpha = beta = 0 it reproduces kmeans(x, k, seed, 1).
PcKMeansResult pckmeans(const MatrixF& x, std::size_t k, const ConstraintSet& constraints,
                        std::uint64_t seed, std::size_t max_iterations = kDefaultMaxIterations);

double pckmeans_objective(const MatrixF& x, std::span<const int> assignment, const MatrixF& centers,
                          const ConstraintSet& constraints);

KSweep pckmeans_elbow(const MatrixF& x, std::span<const std::size_t> ks,
                      const ConstraintSet& constraints, std::uint64_t seed,
                      double tolerance = kDefaultElbowTolerance);

}  // namespace ccest
