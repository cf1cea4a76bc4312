#pragma once

#include "ccest/baselines/constraints.hpp"
#include "ccest/matrix.hpp"
#include "ccest/rng.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace ccest::detail {

using Adjacency = std::vector<std::vector<std::pair<std::size_t, bool>>>;

struct LloydOutput {
    std::vector<int> assignment;
    MatrixF centers;
    std::vector<double> trace;
    std::size_t iterations = 0;
};

// Shared by kmeans and pckmeans. Without constraints (adj == nullptr) the
// visiting order is irrelevant and order_rng is not touched.
LloydOutput lloyd(const MatrixF& x, MatrixF centers, const Adjacency* adj, double alpha, double beta,
                  Rng* order_rng, std::size_t max_iterations);

double distortion(const MatrixF& x, const std::vector<int>& assignment, const MatrixF& centers);

}  // namespace ccest::detail
