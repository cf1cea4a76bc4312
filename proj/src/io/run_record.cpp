#include "ccest/run_record.hpp"

#include <cmath>

namespace ccest {

namespace {
nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
}  // namespace

nlohmann::json to_json(const Estimate& e) {
    return {
        {"cc_hat", num(e.cc_hat)},
        {"stderr", num(e.stderr_)},
        {"ci_low", num(e.ci_low)},
        {"ci_high", num(e.ci_high)},
        {"z", e.z},
        {"n_used", e.n_used},
        {"m_used", e.m_used},
        {"effort_unique_pairs", e.effort_unique_pairs},
        {"effort_fraction", e.effort_fraction},
        {"total_draws", e.total_draws},
        {"max_importance_weight", num(e.max_importance_weight)},
        {"provisional", e.provisional},
    };
}

nlohmann::json to_json(const BudgetPlan& p) {
    return {
        {"total_budget", p.total_budget},
        {"policy", std::string(to_string(p.policy))},
        {"parameter", p.parameter},
        {"n", p.n},
        {"m", p.m},
        {"ratio", p.ratio()},
    };
}

nlohmann::json run_record(const NisRun& run, const RunRecordContext& ctx) {
    const auto& cfg = run.config();
    const auto& st = run.state();
    nlohmann::json config = {
        {"seed", cfg.seed},
        {"mode", std::string(to_string(cfg.mode))},
        {"proposal", std::string(to_string(run.proposals().mode()))},
        {"n_items", st.n},
        {"plan", to_json(run.plan())},
        {"z", cfg.z},
        {"stop_rel_width", cfg.stop_rel_width},
        {"stop_min_vertices", cfg.stop_min_vertices},
    };
    config["tau"] = ctx.tau ? nlohmann::json(*ctx.tau) : nlohmann::json(nullptr);
    config["calibration"] = ctx.calibration ? nlohmann::json(std::string(to_string(*ctx.calibration)))
                                            : nlohmann::json(nullptr);

    nlohmann::json vertices = nlohmann::json::array();
    for (const auto& rec : st.records) {
        nlohmann::json draws = nlohmann::json::array();
        for (const auto& d : rec.draws) {
            nlohmann::json jd = {{"v", d.v}, {"q", d.q_neighbor}, {"answer", d.answer}, {"cache_hit", d.cache_hit}};
            if (ctx.item_ids) jd["v_id"] = (*ctx.item_ids)[d.v];
            draws.push_back(std::move(jd));
        }
        nlohmann::json jv = {{"index", rec.index},
                             {"u", rec.u},
                             {"q_vertex", rec.q_vertex},
                             {"degree_hat", rec.degree_hat},
                             {"weight", rec.weight},
                             {"draws", std::move(draws)}};
        if (ctx.item_ids) jv["u_id"] = (*ctx.item_ids)[rec.u];
        vertices.push_back(std::move(jv));
    }

    nlohmann::json history = nlohmann::json::array();
    for (const auto& e : run.history()) history.push_back(to_json(e));

    return {
        {"config", std::move(config)},
        {"status", std::string(to_string(run.status()))},
        {"vertices", std::move(vertices)},
        {"estimate", run.has_estimate() ? to_json(run.estimate()) : nlohmann::json(nullptr)},
        {"history", std::move(history)},
        {"diagnostics",
         {{"unique_pairs", st.unique_pairs_queried},
          {"total_draws", st.total_draws},
          {"cache_entries", st.cache.size()},
          {"effort_fraction", effort_fraction(st.unique_pairs_queried, st.n)},
          {"max_importance_weight", num(st.max_importance_weight)}}},
    };
}

}  // namespace ccest
