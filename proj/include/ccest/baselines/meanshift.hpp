#pragma once

#include "ccest/matrix.hpp"

#include <cstddef>
#include <vector>

namespace ccest {

// Mean Euclidean distance from each point to its rank-th nearest other
// point (rank 1 is the nearest neighbour).
double mean_nn_distance(const MatrixF& x, std::size_t rank = 1);

struct MeanShiftResult {
    std::size_t k_hat = 0;
    double bandwidth = 0.0;
    std::vector<int> assignment;  // merged mode of each point
    MatrixD modes;
};

// Flat-kernel mean shift seeded at every point, bandwidth from
// mean_nn_distance(x, bandwidth_rank) with the rank clipped to n - 1;
// modes within bandwidth / 2 are merged. Throws ValidationError for n < 2.
MeanShiftResult meanshift_count(const MatrixF& x, std::size_t bandwidth_rank = 1,
                                std::size_t max_iterations = 300);

}  // namespace ccest
