#pragma once

#include "ccest/baselines/constraints.hpp"
#include "ccest/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ccest {

/// Distance used for the traversal and for ordering comparisons. Holds a
/// reference to the matrix; the matrix must outlive the metric.
class FftMetric {
public:
    static FftMetric euclidean(const MatrixF& embeddings);
    // 1 - cosine
    static FftMetric cosine(const MatrixF& cosine);

    std::size_t size() const noexcept { return m_->rows(); }
    void distances_from(std::size_t u, std::span<double> out) const;

private:
    FftMetric(const MatrixF* m, bool euclid) : m_(m), euclid_(euclid) {}
    const MatrixF* m_;
    bool euclid_;
};

// 1 if u and v are the same individual.
using PairAnswerFn = std::function<int(std::size_t, std::size_t)>;

struct FftQuery {
    std::size_t u;
    std::size_t representative;
    int answer;
};

struct FftState {
    std::vector<std::size_t> sampled;                   // traversal order
    std::vector<std::vector<std::size_t>> individuals;  // founder first
    std::size_t queries_used = 0;
    std::vector<std::size_t> step_costs;  // comparisons per committed step
    std::vector<FftQuery> log;            // every query, committed or not
};

struct FftResult {
    std::size_t k_hat = 0;
    FftState state;
};

// Farthest-first discovery of individuals. The first point is index 0 of
// a seed-shuffled order (ties in the traversal also break by that order).
// Each new point is compared against one representative per individual,
// nearest first, until a match; every comparison costs one query. A step
// that runs out of budget before finding a match is discarded, so a
// budget of 1 yields k_hat = 1.
FftResult fft_estimate(const FftMetric& metric, const PairAnswerFn& answer, std::size_t budget,
                       std::uint64_t seed);

// Every logged query becomes a must-link (same) or cannot-link (different).
ConstraintSet fft_constraints(const FftState& state, double alpha = 1.0, double beta = 1.0);

}  // namespace ccest
