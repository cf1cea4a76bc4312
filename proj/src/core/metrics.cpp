#include "ccest/metrics.hpp"

#include "ccest/errors.hpp"
#include "ccest/graph.hpp"
#include "ccest/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccest {

double relative_error(double cc_hat, double cc_true) {
    if (!(cc_true > 0.0)) throw ValidationError("relative_error: true count must be positive");
    return std::abs(cc_true - cc_hat) / cc_true;
}

BiasCoverage empirical_bias_and_coverage(std::span<const TrialRow> rows, double cc_true) {
    if (rows.size() < 2) throw ValidationError("bias and coverage need at least two trials");
    double sum = 0.0;
    std::size_t covered = 0;
    for (const auto& r : rows) {
        sum += r.cc_hat;
        if (r.ci_low <= cc_true && cc_true <= r.ci_high) ++covered;
    }
    const double k = static_cast<double>(rows.size());
    return {sum / k - cc_true, static_cast<double>(covered) / k};
}

TrialSummary summarize(std::span<const TrialRow> rows, double cc_true) {
    TrialSummary s;
    s.trials = rows.size();
    if (rows.empty()) return s;
    const double k = static_cast<double>(rows.size());
    std::size_t with_ci = 0, covered = 0;
    for (const auto& r : rows) {
        s.mean_estimate += r.cc_hat;
        s.mean_rel_error += r.rel_error;
        s.mean_unique_pairs += static_cast<double>(r.unique_pairs);
        s.mean_effort_fraction += r.effort_fraction;
        if (r.has_ci) {
            ++with_ci;
            s.mean_ci_width += r.ci_high - r.ci_low;
            if (r.ci_low <= cc_true && cc_true <= r.ci_high) ++covered;
        }
    }
    s.mean_estimate /= k;
    s.mean_rel_error /= k;
    s.mean_unique_pairs /= k;
    s.mean_effort_fraction /= k;
    s.bias = s.mean_estimate - cc_true;
    s.ci_trials = with_ci;
    if (with_ci > 0) {
        s.mean_ci_width /= static_cast<double>(with_ci);
        s.coverage = static_cast<double>(covered) / static_cast<double>(with_ci);
    }
    if (rows.size() > 1) {
        double ss = 0.0;
        for (const auto& r : rows) ss += (r.cc_hat - s.mean_estimate) * (r.cc_hat - s.mean_estimate);
        s.stderr_of_mean = std::sqrt(ss / (k - 1.0) / k);
    }
    return s;
}

double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw ValidationError("clustering_accuracy: label lists differ in length");
    if (predicted.empty()) throw ValidationError("clustering_accuracy: empty label lists");
    // Dense re-encoding so arbitrary integer ids work.
    auto dense = [](std::span<const int> xs) {
        std::vector<std::string> s;
        s.reserve(xs.size());
        for (int x : xs) s.push_back(std::to_string(x));
        return encode_labels(s);
    };
    const auto p = dense(predicted);
    const auto t = dense(truth);
    const std::size_t kp = static_cast<std::size_t>(*std::max_element(p.begin(), p.end())) + 1;
    const std::size_t kt = static_cast<std::size_t>(*std::max_element(t.begin(), t.end())) + 1;
    const std::size_t k = std::max(kp, kt);
    MatrixD counts(k, k, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) counts(p[i], t[i]) += 1.0;
    MatrixD cost(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) cost(a, b) = -counts(a, b);
    const auto match = hungarian_min_cost(cost);
    double hits = 0.0;
    for (std::size_t a = 0; a < k; ++a) hits += counts(a, static_cast<std::size_t>(match[a]));
    return hits / static_cast<double>(p.size());
}

double clustering_accuracy(std::span<const std::string> predicted, std::span<const std::string> truth) {
    if (predicted.size() != truth.size())
        throw ValidationError("clustering_accuracy: label lists differ in length");
    const auto p = encode_labels(predicted);
    const auto t = encode_labels(truth);
    return clustering_accuracy(std::span<const int>(p), std::span<const int>(t));
}

double similarity_auc(const MatrixF& cosine, std::span<const int> labels) {
    const std::size_t n = cosine.rows();
    if (labels.size() != n) throw ValidationError("similarity_auc: label count differs from matrix size");
    struct Pair {
        float score;
        bool same;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) pairs.push_back({cosine(u, v), labels[u] == labels[v]});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.score < b.score; });
    double positives = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < pairs.size();) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].score == pairs[i].score) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (pairs[t].same) {
                positives += 1.0;
                rank_sum += avg_rank;
            }
        i = j;
    }
    const double negatives = static_cast<double>(pairs.size()) - positives;
    if (positives == 0.0 || negatives == 0.0) throw ValidationError("similarity_auc: need both same and different pairs");
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

}  // namespace ccest
