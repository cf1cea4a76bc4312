#pragma once

#include "ccest/baselines/elbow.hpp"
#include "ccest/matrix.hpp"
#include "ccest/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ccest {

inline constexpr std::size_t kDefaultRestarts = 3;
inline constexpr std::size_t kDefaultMaxIterations = 100;

struct KMeansResult {
    std::vector<int> assignment;
    MatrixF centers;
    double wcss = 0.0;
    std::size_t iterations = 0;
    std::vector<double> wcss_trace;  // after each Lloyd iteration
};

// k-means++ seeding: first center uniform, the rest by squared distance.
MatrixF kmeanspp_init(const MatrixF& x, std::size_t k, Rng& rng);

// Lloyd's algorithm from k-means++; best of `restarts` by WCSS. Restart r
// draws from the stream (seed, KMeans, r). Throws ValidationError unless
// 1 <= k <= n.
KMeansResult kmeans(const MatrixF& x, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = kDefaultRestarts,
                    std::size_t max_iterations = kDefaultMaxIterations);

double wcss(const MatrixF& x, std::span<const int> assignment, const MatrixF& centers);

struct KSweep {
    ElbowCurve curve;  // xs = k, js = objective
    std::size_t k_hat = 0;
};

// WCSS over each k, then the elbow rule.
KSweep kmeans_elbow(const MatrixF& x, std::span<const std::size_t> ks, std::uint64_t seed,
                    std::size_t restarts = kDefaultRestarts,
                    double tolerance = kDefaultElbowTolerance);

// lo, lo+step, ... up to hi inclusive, clipped to n.
std::vector<std::size_t> k_range(std::size_t lo, std::size_t hi, std::size_t step, std::size_t n);

}  // namespace ccest
