#pragma once

#include "ccest/similarity.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ccest {

// |cc_true - cc_hat| / cc_true.
double relative_error(double cc_hat, double cc_true);

/// One row of a trial report.
struct TrialRow {
    std::string method;
    std::size_t budget = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double cc_hat = 0.0;
    double stderr_ = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_used = 0;
    std::size_t m_used = 0;
    std::size_t unique_pairs = 0;
    std::size_t draws = 0;
    double effort_fraction = 0.0;
    double rel_error = 0.0;
    bool has_ci = false;
};

struct BiasCoverage {
    double bias = 0.0;
    double coverage = 0.0;
};

// bias = mean(cc_hat) - cc_true; coverage = share of rows with ci_low <= cc_true <= ci_high.
BiasCoverage empirical_bias_and_coverage(std::span<const TrialRow> rows, double cc_true);

struct TrialSummary {
    std::size_t trials = 0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double stderr_of_mean = 0.0;  // sample std of cc_hat / sqrt(trials)
    std::size_t ci_trials = 0;    // rows that carry a CI
    double coverage = 0.0;        // over those rows
    double mean_rel_error = 0.0;
    double mean_ci_width = 0.0;
    double mean_unique_pairs = 0.0;
    double mean_effort_fraction = 0.0;
};

TrialSummary summarize(std::span<const TrialRow> rows, double cc_true);

// max over label permutations of the matched fraction, via the Hungarian method.
double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth);
double clustering_accuracy(std::span<const std::string> predicted, std::span<const std::string> truth);

// Area under the ROC curve of cosine as a same/different pair classifier
// (Mann-Whitney U with tie correction). Needs both classes present.
double similarity_auc(const MatrixF& cosine, std::span<const int> labels);

}  // namespace ccest
