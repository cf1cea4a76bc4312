#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ccest {

inline constexpr double kDefaultElbowTolerance = 0.02;

struct ElbowCurve {
    std::vector<double> xs;  // strictly increasing
    std::vector<double> js;
    std::size_t elbow_index = 0;
};

// Smallest index i such that every later successive slope is below the
// tolerance. A slope is |j[t+1]-j[t]| / range(js), rescaled by
// mean_step(xs) / (x[t+1]-x[t]) so uneven spacing is measured per unit of x
// (on an even grid the factor is 1). When only the last point qualifies, or
// js is flat, the first index is returned.
// Throws ValidationError for fewer than 4 points or non-increasing xs.
std::size_t elbow_index(std::span<const double> xs, std::span<const double> js,
                        double tolerance = kDefaultElbowTolerance);

// Sets curve.elbow_index and returns the selected x.
double elbow_select(ElbowCurve& curve, double tolerance = kDefaultElbowTolerance);

}  // namespace ccest
