#pragma once

#include "ccest/baselines/elbow.hpp"
#include "ccest/matrix.hpp"
#include "ccest/similarity.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ccest {

// Component labels of the graph with an edge wherever cosine(u, v) >= t.
std::vector<int> threshold_components(const MatrixF& cosine, double threshold);

// WCSS of a partition of unit-norm points, from their cosine matrix:
// sum over clusters C of |C| - (1/|C|) sum_{i,j in C} c(i, j).
double partition_wcss(const MatrixF& cosine, std::span<const int> labels);

struct CocoResult {
    std::size_t k_hat = 0;
    double threshold = 0.0;
    // Per threshold, ascending.
    std::vector<double> thresholds;
    std::vector<std::size_t> components;
    std::vector<double> wcss;
    // Elbow curve over the k grid. WCSS as a function of the component count
    // is interpolated linearly between observed counts and held flat
    // outside them; curve_thresholds[i] is the lowest threshold giving at
    // least xs[i] components (the highest threshold when none does).
    ElbowCurve curve;
    std::vector<double> curve_thresholds;
};

// `count` evenly spaced thresholds across the observed off-diagonal range.
std::vector<double> default_thresholds(const SimilarityModel& model, std::size_t count = 40);

// Thresholds the similarity at each value, maps the partitions onto the k
// grid used by the k-means elbow and applies the same elbow rule. Returns
// the component count at the selected threshold. An empty grid means
// 1..n. Throws ValidationError for an empty threshold list or a grid of
// fewer than 4 values.
CocoResult coco_estimate(const SimilarityModel& model, std::span<const double> thresholds,
                         std::span<const std::size_t> ks = {}, double tolerance = kDefaultElbowTolerance);

}  // namespace ccest
