#pragma once

#include "ccest/budget.hpp"
#include "ccest/graph.hpp"
#include "ccest/proposals.hpp"

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ccest {

// NMC: uniform proposals with the plain nested Monte Carlo formulas.
// NIS: importance-weighted formulas for arbitrary proposals.
enum class EstimatorMode { NMC, NIS };

EstimatorMode estimator_mode_from_string(std::string_view name);
std::string_view to_string(EstimatorMode mode);

inline constexpr double kDefaultZ = 1.96;
inline constexpr double kDefaultStopRelWidth = 0.25;
inline constexpr std::size_t kDefaultStopMinVertices = 8;

// NIS: (1/M) sum_j s_j / q_j.  NMC: ((n-1)/M) sum_j s_j.
double estimate_degree(EstimatorMode mode, std::size_t n, std::span<const NeighborSample> neighbors,
                       std::span<const int> answers);

// Per-vertex term w_i. NIS: (1/Q(u)) / (1 + d^). NMC: n / (1 + d^).
double vertex_weight(EstimatorMode mode, std::size_t n, double q_vertex, double degree_hat);

/// Welford streaming mean and variance.
class RunningMoments {
public:
    void add(double x) {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }
    std::size_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    // Unbiased (n - 1) sample variance; 0 for fewer than two values.
    double sample_variance() const noexcept {
        return count_ < 2 ? 0.0 : std::max(0.0, m2_ / static_cast<double>(count_ - 1));
    }

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Answers keyed by unordered pair; one entry per pair.
class AnswerCache {
public:
    explicit AnswerCache(std::size_t n = 0) : n_(n) {}

    std::optional<int> lookup(std::size_t u, std::size_t v) const;
    // Throws ConflictError if the pair already holds a different answer.
    void insert(std::size_t u, std::size_t v, int answer);
    std::size_t size() const noexcept { return map_.size(); }

private:
    std::uint64_t key(std::size_t u, std::size_t v) const;

    std::size_t n_;
    std::unordered_map<std::uint64_t, int> map_;
};

struct NeighborDraw {
    std::size_t v = 0;
    double q_neighbor = 0.0;
    int answer = 0;
    bool cache_hit = false;
};

struct VertexRecord {
    std::size_t index = 0;  // position i in the draw sequence
    std::size_t u = 0;
    double q_vertex = 0.0;
    std::vector<NeighborDraw> draws;
    double degree_hat = 0.0;
    double weight = 0.0;
};

struct Estimate {
    double cc_hat = 0.0;
    double stderr_ = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double z = kDefaultZ;
    std::size_t n_used = 0;
    std::size_t m_used = 0;
    std::size_t effort_unique_pairs = 0;
    double effort_fraction = 0.0;
    std::size_t total_draws = 0;
    double max_importance_weight = 0.0;
    bool provisional = false;

    double rel_width() const noexcept { return cc_hat > 0.0 ? (ci_high - ci_low) / cc_hat : std::numeric_limits<double>::infinity(); }
};

double effort_fraction(std::size_t unique_pairs, std::size_t n);

struct EstimatorState {
    EstimatorMode mode = EstimatorMode::NIS;
    std::size_t n = 0;
    std::size_t n_target = 0;
    std::size_t m_target = 0;
    std::vector<VertexRecord> records;  // completed records only
    AnswerCache cache;
    std::size_t unique_pairs_queried = 0;
    std::size_t total_draws = 0;
    RunningMoments moments;
    double max_importance_weight = 0.0;

    EstimatorState() = default;
    EstimatorState(EstimatorMode mode_, std::size_t n_, std::size_t n_target_, std::size_t m_target_)
        : mode(mode_), n(n_), n_target(n_target_), m_target(m_target_), cache(n_) {}
};

// Batch recomputation from the completed records (two-pass variance).
Estimate estimate_cc(const EstimatorState& state, double z = kDefaultZ);

// Fills degree_hat and weight of a complete record, appends it and updates
// the streaming moments. Throws StateError when the record is incomplete.
Estimate incremental_update(EstimatorState& state, VertexRecord record, double z = kDefaultZ);

// Estimate from the streaming moments of the state.
Estimate current_estimate(const EstimatorState& state, double z = kDefaultZ);

struct RunConfig {
    std::uint64_t seed = 0;
    EstimatorMode mode = EstimatorMode::NIS;
    double z = kDefaultZ;
    double stop_rel_width = 0.0;  // 0 disables the width stopping rule
    std::size_t stop_min_vertices = kDefaultStopMinVertices;
};

enum class RunStatus { Active, StoppedBudget, StoppedWidth };
std::string_view to_string(RunStatus s);

struct PendingQuery {
    std::size_t draw_index = 0;  // i * M + j, unique within a run
    std::size_t vertex_index = 0;
    std::size_t u = 0;
    std::size_t v = 0;
    double q_vertex = 0.0;
    double q_neighbor = 0.0;
};

/// Nested importance sampling as a resumable step machine. Vertex i draws
/// u_i and its M neighbors from an Rng derived from (seed, i), so the run is
/// fully determined by the seed and the sequence of answers. Answers are
/// cached by unordered pair: a pair already answered is never surfaced again.
class NisRun {
public:
    NisRun(ProposalPair proposals, BudgetPlan plan, RunConfig config);

    // The next pair that needs an answer, advancing through cache hits and
    // completed vertices. nullopt once the run has stopped. Calling it again
    // without submitting returns the same query.
    std::optional<PendingQuery> next_query();
    void submit(int answer);

    const std::optional<PendingQuery>& pending() const noexcept { return pending_; }
    RunStatus status() const noexcept { return status_; }
    bool finished() const noexcept { return status_ != RunStatus::Active; }

    bool has_estimate() const noexcept { return !state_.records.empty(); }
    // Throws StateError before the first vertex completes.
    Estimate estimate() const;
    // Includes the partial current vertex when it has at least one answer; flagged provisional.
    std::optional<Estimate> provisional() const;

    const EstimatorState& state() const noexcept { return state_; }
    const std::vector<Estimate>& history() const noexcept { return history_; }
    const BudgetPlan& plan() const noexcept { return plan_; }
    const RunConfig& config() const noexcept { return config_; }
    const ProposalPair& proposals() const noexcept { return proposals_; }
    const VertexRecord* current_vertex() const noexcept { return current_ ? &*current_ : nullptr; }

private:
    void start_vertex();
    void record_answer(int answer, bool cache_hit);
    void finish_vertex();

    ProposalPair proposals_;
    BudgetPlan plan_;
    RunConfig config_;
    EstimatorState state_;
    std::vector<Estimate> history_;
    std::optional<VertexRecord> current_;
    std::vector<NeighborSample> current_draws_;
    std::optional<PendingQuery> pending_;
    std::size_t next_vertex_ = 0;
    RunStatus status_ = RunStatus::Active;
};

// Returns nullopt when no answer is available yet (human mode).
using AnswerSource = std::function<std::optional<int>(std::size_t u, std::size_t v)>;

struct RunResult {
    NisRun run;
    std::optional<Estimate> estimate;
    bool resumable = false;  // stopped early because the source had no answer
};

RunResult run_nis(ProposalPair proposals, BudgetPlan plan, RunConfig config, const AnswerSource& answers);
RunResult run_nis(ProposalPair proposals, BudgetPlan plan, RunConfig config, const TrueSimilarityOracle& oracle);

}  // namespace ccest
