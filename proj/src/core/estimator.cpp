#include "ccest/estimator.hpp"

#include "ccest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccest {

EstimatorMode estimator_mode_from_string(std::string_view name) {
    if (name == "nmc" || name == "NMC") return EstimatorMode::NMC;
    if (name == "nis" || name == "NIS") return EstimatorMode::NIS;
    throw ConfigError("unknown estimator mode '" + std::string(name) + "' (expected nmc or nis)");
}

std::string_view to_string(EstimatorMode mode) { return mode == EstimatorMode::NMC ? "nmc" : "nis"; }

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Active: return "active";
        case RunStatus::StoppedBudget: return "stopped-budget";
        case RunStatus::StoppedWidth: return "stopped-width";
    }
    return "unknown";
}

double estimate_degree(EstimatorMode mode, std::size_t n, std::span<const NeighborSample> neighbors,
                       std::span<const int> answers) {
    if (neighbors.size() != answers.size())
        throw ValidationError("estimate_degree: " + std::to_string(answers.size()) + " answers for " +
                              std::to_string(neighbors.size()) + " neighbor draws");
    if (neighbors.empty()) throw ValidationError("estimate_degree: no neighbor draws");
    const double m = static_cast<double>(neighbors.size());
    if (mode == EstimatorMode::NMC) {
        double hits = 0.0;
        for (int a : answers) hits += a;
        return static_cast<double>(n - 1) / m * hits;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
        if (!(neighbors[j].q_neighbor > 0.0)) throw ValidationError("estimate_degree: non-positive proposal probability");
        if (answers[j]) sum += static_cast<double>(answers[j]) / neighbors[j].q_neighbor;
    }
    return sum / m;
}

double vertex_weight(EstimatorMode mode, std::size_t n, double q_vertex, double degree_hat) {
    if (mode == EstimatorMode::NMC) return static_cast<double>(n) / (1.0 + degree_hat);
    return (1.0 / q_vertex) * (1.0 / (1.0 + degree_hat));
}

std::uint64_t AnswerCache::key(std::size_t u, std::size_t v) const {
    if (u == v) throw ValidationError("self-pairs are never queried");
    if (u > v) std::swap(u, v);
    return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n_) + v;
}

std::optional<int> AnswerCache::lookup(std::size_t u, std::size_t v) const {
    const auto it = map_.find(key(u, v));
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

void AnswerCache::insert(std::size_t u, std::size_t v, int answer) {
    auto [it, inserted] = map_.try_emplace(key(u, v), answer);
    if (!inserted && it->second != answer)
        throw ConflictError("pair (" + std::to_string(u) + "," + std::to_string(v) + ") already answered differently");
}

double effort_fraction(std::size_t unique_pairs, std::size_t n) {
    if (n < 2) throw ValidationError("effort_fraction: need n >= 2");
    const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return static_cast<double>(unique_pairs) / total;
}

namespace {

Estimate make_estimate(double mean, double sample_variance, std::size_t count, const EstimatorState& state, double z) {
    Estimate e;
    e.cc_hat = mean;
    e.z = z;
    e.n_used = count;
    e.m_used = state.m_target;
    if (count < 2) {
        e.stderr_ = std::numeric_limits<double>::infinity();
        e.ci_low = 0.0;
        e.ci_high = static_cast<double>(state.n);
    } else {
        e.stderr_ = std::sqrt(sample_variance / static_cast<double>(count));
        e.ci_low = mean - z * e.stderr_;
        e.ci_high = mean + z * e.stderr_;
    }
    e.effort_unique_pairs = state.unique_pairs_queried;
    e.effort_fraction = state.n >= 2 ? effort_fraction(state.unique_pairs_queried, state.n) : 0.0;
    e.total_draws = state.total_draws;
    e.max_importance_weight = state.max_importance_weight;
    return e;
}

void fill_record(const EstimatorState& state, VertexRecord& record, double& max_weight) {
    std::vector<NeighborSample> neighbors;
    std::vector<int> answers;
    neighbors.reserve(record.draws.size());
    answers.reserve(record.draws.size());
    for (const auto& d : record.draws) {
        neighbors.push_back({d.v, d.q_neighbor});
        answers.push_back(d.answer);
        if (d.answer) max_weight = std::max(max_weight, 1.0 / d.q_neighbor);
    }
    record.degree_hat = estimate_degree(state.mode, state.n, neighbors, answers);
    record.weight = vertex_weight(state.mode, state.n, record.q_vertex, record.degree_hat);
}

}  // namespace

Estimate estimate_cc(const EstimatorState& state, double z) {
    const auto& recs = state.records;
    if (recs.empty()) throw StateError("estimate_cc: no completed vertex records");
    double sum = 0.0;
    for (const auto& r : recs) sum += r.weight;
    const double mean = sum / static_cast<double>(recs.size());
    double ss = 0.0;
    for (const auto& r : recs) ss += (r.weight - mean) * (r.weight - mean);
    const double var = recs.size() > 1 ? ss / static_cast<double>(recs.size() - 1) : 0.0;
    return make_estimate(mean, var, recs.size(), state, z);
}

Estimate current_estimate(const EstimatorState& state, double z) {
    if (state.moments.count() == 0) throw StateError("no completed vertex records");
    return make_estimate(state.moments.mean(), state.moments.sample_variance(), state.moments.count(), state, z);
}

Estimate incremental_update(EstimatorState& state, VertexRecord record, double z) {
    if (record.draws.size() != state.m_target || record.draws.empty())
        throw StateError("vertex record has " + std::to_string(record.draws.size()) + " of " +
                         std::to_string(state.m_target) + " neighbor answers");
    for (const auto& d : record.draws)
        if (d.answer != 0 && d.answer != 1) throw StateError("vertex record holds a non-binary answer");
    fill_record(state, record, state.max_importance_weight);
    state.moments.add(record.weight);
    state.records.push_back(std::move(record));
    return current_estimate(state, z);
}

NisRun::NisRun(ProposalPair proposals, BudgetPlan plan, RunConfig config)
    : proposals_(std::move(proposals)), plan_(plan), config_(config),
      state_(config.mode, proposals_.size(), plan.n, plan.m) {
    if (plan_.n < 1 || plan_.m < 1) throw ValidationError("plan needs N >= 1 and M >= 1");
    if (config_.mode == EstimatorMode::NMC && proposals_.mode() != ProposalMode::Uniform)
        throw ConfigError("nested Monte Carlo requires uniform proposals");
    if (!(config_.z > 0.0)) throw ValidationError("z must be positive");
    if (config_.stop_rel_width < 0.0) throw ValidationError("stop width must be non-negative");
}

void NisRun::start_vertex() {
    Rng rng(config_.seed, Stream::Vertex, next_vertex_);
    const VertexSample vs = proposals_.sample_vertex(rng);
    current_draws_ = proposals_.sample_neighbors(vs.u, plan_.m, rng);
    VertexRecord rec;
    rec.index = next_vertex_;
    rec.u = vs.u;
    rec.q_vertex = vs.q_vertex;
    rec.draws.reserve(plan_.m);
    current_ = std::move(rec);
    ++next_vertex_;
}

void NisRun::record_answer(int answer, bool cache_hit) {
    const auto& draw = current_draws_[current_->draws.size()];
    current_->draws.push_back({draw.v, draw.q_neighbor, answer, cache_hit});
    ++state_.total_draws;
}

void NisRun::finish_vertex() {
    Estimate e = incremental_update(state_, std::move(*current_), config_.z);
    current_.reset();
    current_draws_.clear();
    history_.push_back(e);
    if (config_.stop_rel_width > 0.0 && e.n_used >= std::max<std::size_t>(2, config_.stop_min_vertices) &&
        e.rel_width() <= config_.stop_rel_width) {
        status_ = RunStatus::StoppedWidth;
    } else if (next_vertex_ >= plan_.n) {
        status_ = RunStatus::StoppedBudget;
    }
}

std::optional<PendingQuery> NisRun::next_query() {
    if (pending_) return pending_;
    while (status_ == RunStatus::Active) {
        if (!current_) {
            if (next_vertex_ >= plan_.n) {
                status_ = RunStatus::StoppedBudget;
                break;
            }
            start_vertex();
        }
        const std::size_t j = current_->draws.size();
        if (j == plan_.m) {
            finish_vertex();
            continue;
        }
        const auto& draw = current_draws_[j];
        if (auto cached = state_.cache.lookup(current_->u, draw.v)) {
            record_answer(*cached, true);
            continue;
        }
        pending_ = PendingQuery{current_->index * plan_.m + j, current_->index, current_->u, draw.v,
                                current_->q_vertex, draw.q_neighbor};
        return pending_;
    }
    return std::nullopt;
}

void NisRun::submit(int answer) {
    if (!pending_) throw StateError("no outstanding query");
    if (answer != 0 && answer != 1) throw ValidationError("answer must be 0 or 1");
    state_.cache.insert(pending_->u, pending_->v, answer);
    ++state_.unique_pairs_queried;
    record_answer(answer, false);
    pending_.reset();
    // Settle the current vertex as far as the cache allows, without starting a new one.
    while (current_->draws.size() < plan_.m) {
        const auto& draw = current_draws_[current_->draws.size()];
        auto cached = state_.cache.lookup(current_->u, draw.v);
        if (!cached) break;
        record_answer(*cached, true);
    }
    if (current_->draws.size() == plan_.m) finish_vertex();
}

Estimate NisRun::estimate() const { return current_estimate(state_, config_.z); }

std::optional<Estimate> NisRun::provisional() const {
    if (!current_ || current_->draws.empty()) {
        if (!has_estimate()) return std::nullopt;
        return estimate();
    }
    std::vector<NeighborSample> neighbors;
    std::vector<int> answers;
    for (const auto& d : current_->draws) {
        neighbors.push_back({d.v, d.q_neighbor});
        answers.push_back(d.answer);
    }
    const double dhat = estimate_degree(state_.mode, state_.n, neighbors, answers);
    RunningMoments m = state_.moments;
    m.add(vertex_weight(state_.mode, state_.n, current_->q_vertex, dhat));
    Estimate e = make_estimate(m.mean(), m.sample_variance(), m.count(), state_, config_.z);
    e.provisional = true;
    return e;
}

RunResult run_nis(ProposalPair proposals, BudgetPlan plan, RunConfig config, const AnswerSource& answers) {
    RunResult result{NisRun(std::move(proposals), plan, config), std::nullopt, false};
    while (auto q = result.run.next_query()) {
        const auto a = answers(q->u, q->v);
        if (!a) {
            result.resumable = true;
            break;
        }
        result.run.submit(*a);
    }
    if (result.run.has_estimate()) result.estimate = result.run.estimate();
    return result;
}

RunResult run_nis(ProposalPair proposals, BudgetPlan plan, RunConfig config, const TrueSimilarityOracle& oracle) {
    return run_nis(std::move(proposals), plan, config,
                   [&oracle](std::size_t u, std::size_t v) -> std::optional<int> { return oracle.answer(u, v); });
}

}  // namespace ccest
