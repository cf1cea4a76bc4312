#include "ccest/harness.hpp"

#include "ccest/baselines/coco.hpp"
#include "ccest/baselines/fft.hpp"
#include "ccest/baselines/kmeans.hpp"
#include "ccest/baselines/meanshift.hpp"
#include "ccest/baselines/pckmeans.hpp"
#include "ccest/errors.hpp"
#include "ccest/graph.hpp"
#include "ccest/proposals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>

#include <omp.h>

namespace ccest {

namespace fs = std::filesystem;

bool is_known_method(std::string_view name) {
    return std::find(std::begin(kMethods), std::end(kMethods), name) != std::end(kMethods);
}

namespace {

bool budget_free(std::string_view m) { return m == "kmeans" || m == "coco" || m == "meanshift"; }
bool needs_embeddings(std::string_view m) { return m == "kmeans" || m == "meanshift" || m == "pckmeans"; }

std::size_t parse_size(std::string_view s, std::string_view what) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("bad " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

nlohmann::json synthetic_json(const SyntheticSpec& s) {
    return {{"n", s.n},           {"k", s.k},
            {"sizes", std::string(to_string(s.size_dist))},
            {"zipf_s", s.zipf_s}, {"dim", s.dim},
            {"within_sim", s.within_sim}, {"cross_sim", s.cross_sim},
            {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
}

}  // namespace

KRange parse_k_range(std::string_view text) {
    auto a = text.find(':');
    auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (b == std::string_view::npos) throw ConfigError("k range must look like lo:hi:step, got '" + std::string(text) + "'");
    KRange r{parse_size(text.substr(0, a), "k range"), parse_size(text.substr(a + 1, b - a - 1), "k range"),
             parse_size(text.substr(b + 1), "k range")};
    if (r.lo < 1 || r.hi < r.lo || r.step < 1) throw ConfigError("k range needs 1 <= lo <= hi and step >= 1");
    return r;
}

void ExperimentConfig::validate() const {
    if (methods.empty()) throw ConfigError("no methods given");
    for (const auto& m : methods)
        if (!is_known_method(m)) throw ConfigError("unknown method '" + m + "'");
    if (budgets.empty()) throw ConfigError("empty budget grid");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (budgets[i] < 1) throw ConfigError("budgets must be positive");
        if (i > 0 && budgets[i] <= budgets[i - 1]) throw ConfigError("budget grid must be strictly increasing");
    }
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!dataset.synthetic && dataset.embeddings.empty() && dataset.similarity.empty())
        throw ConfigError("dataset needs a synthetic spec, an embeddings file or a similarity file");
    if (!dataset.synthetic && dataset.labels.empty()) throw ConfigError("benchmarks need a labels file");
    if (dataset.synthetic) dataset.synthetic->validate();
    if (k_range.lo < 1 || k_range.hi < k_range.lo || k_range.step < 1) throw ConfigError("invalid k range");
    if (meanshift_rank < 1) throw ConfigError("meanshift rank must be at least 1");
    if (kmeans_restarts < 1) throw ConfigError("kmeans restarts must be at least 1");
    if (coco_thresholds < 2) throw ConfigError("coco needs at least 2 thresholds");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json ds;
    if (dataset.synthetic) ds["synthetic"] = synthetic_json(*dataset.synthetic);
    else ds["synthetic"] = nullptr;
    ds["embeddings"] = dataset.embeddings;
    ds["labels"] = dataset.labels;
    ds["manifest"] = dataset.manifest;
    ds["similarity"] = dataset.similarity;
    return {
        {"dataset", ds},
        {"methods", methods},
        {"budgets", budgets},
        {"trials", trials},
        {"seed", seed},
        {"tau", tau},
        {"calibration", std::string(to_string(calibration))},
        {"policy", std::string(to_string(policy))},
        {"policy_parameter", policy_parameter},
        {"z", z},
        {"k_range", {k_range.lo, k_range.hi, k_range.step}},
        {"elbow_tolerance", elbow_tolerance},
        {"kmeans_restarts", kmeans_restarts},
        {"meanshift_rank", meanshift_rank},
        {"coco_thresholds", coco_thresholds},
    };
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.to_json().dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
    ExperimentData data;
    const auto& src = config.dataset;
    if (src.synthetic) {
        data.dataset = generate_synthetic(*src.synthetic);
    } else if (!src.embeddings.empty()) {
        std::optional<fs::path> labels, manifest;
        if (!src.labels.empty()) labels = src.labels;
        if (!src.manifest.empty()) manifest = src.manifest;
        data.dataset = load_dataset(src.embeddings, labels, manifest);
    }
    if (!src.similarity.empty()) {
        auto model = load_similarity(src.similarity, config.tau, config.calibration);
        if (data.dataset.size() == 0) {
            std::optional<std::vector<std::string>> labels;
            if (!src.labels.empty()) labels = read_labels(src.labels);
            data.dataset = make_dataset(std::nullopt, std::move(labels), model.size());
        } else if (model.size() != data.dataset.size()) {
            throw ConsistencyError("similarity has " + std::to_string(model.size()) + " rows but the dataset has " +
                                   std::to_string(data.dataset.size()) + " items");
        }
        data.model = std::make_shared<const SimilarityModel>(std::move(model));
    } else {
        data.model = std::make_shared<const SimilarityModel>(
            SimilarityModel::from_embeddings(*data.dataset.embeddings, config.tau, config.calibration));
    }
    if (!data.dataset.labels) throw ConfigError("benchmarks need ground-truth labels");
    data.codes = encode_labels(*data.dataset.labels);
    data.cc_true = static_cast<double>(exact_cc_unionfind(std::span<const int>(data.codes)));
    return data;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) { return derive_seed(seed, Stream::Trial, trial); }

namespace {

struct Proposals {
    std::optional<ProposalPair> similarity;
    std::optional<ProposalPair> uniform;
};

TrialRow trial_impl(const ExperimentConfig& cfg, const ExperimentData& data, const Proposals& props,
                    std::string_view method, std::size_t budget, std::size_t trial) {
    TrialRow row;
    row.method = std::string(method);
    row.budget = budget;
    row.trial = trial;
    row.seed = trial_seed(cfg.seed, trial);
    const std::size_t n = data.dataset.size();
    TrueSimilarityOracle oracle(data.codes);

    if (method == "nis" || method == "nmc") {
        bool nis = method == "nis";
        ProposalPair pp = nis ? (props.similarity ? *props.similarity : ProposalPair::similarity_driven(data.model))
                              : (props.uniform ? *props.uniform : ProposalPair::uniform(n));
        RunConfig rc;
        rc.seed = row.seed;
        rc.mode = nis ? EstimatorMode::NIS : EstimatorMode::NMC;
        rc.z = cfg.z;
        auto result = run_nis(std::move(pp), plan_budget(budget, cfg.policy, cfg.policy_parameter), rc, oracle);
        const Estimate& e = *result.estimate;
        row.cc_hat = e.cc_hat;
        row.stderr_ = e.stderr_;
        row.ci_low = e.ci_low;
        row.ci_high = e.ci_high;
        row.n_used = e.n_used;
        row.m_used = e.m_used;
        row.unique_pairs = e.effort_unique_pairs;
        row.draws = e.total_draws;
        row.has_ci = true;
    } else if (method == "fft" || method == "pckmeans") {
        auto metric = data.dataset.embeddings ? FftMetric::euclidean(*data.dataset.embeddings)
                                              : FftMetric::cosine(data.model->cosine());
        auto fft = fft_estimate(
            metric, [&](std::size_t u, std::size_t v) { return oracle.answer(u, v); }, budget, row.seed);
        row.unique_pairs = row.draws = fft.state.queries_used;
        if (method == "fft") {
            row.cc_hat = static_cast<double>(fft.k_hat);
        } else {
            auto ks = k_range(cfg.k_range.lo, cfg.k_range.hi, cfg.k_range.step, n);
            auto cs = fft_constraints(fft.state);
            row.cc_hat = static_cast<double>(
                pckmeans_elbow(*data.dataset.embeddings, ks, cs, row.seed, cfg.elbow_tolerance).k_hat);
        }
    } else if (method == "kmeans") {
        auto ks = k_range(cfg.k_range.lo, cfg.k_range.hi, cfg.k_range.step, n);
        row.cc_hat = static_cast<double>(
            kmeans_elbow(*data.dataset.embeddings, ks, row.seed, cfg.kmeans_restarts, cfg.elbow_tolerance).k_hat);
    } else if (method == "coco") {
        auto ts = default_thresholds(*data.model, cfg.coco_thresholds);
        auto ks = k_range(cfg.k_range.lo, cfg.k_range.hi, cfg.k_range.step, n);
        row.cc_hat = static_cast<double>(coco_estimate(*data.model, ts, ks, cfg.elbow_tolerance).k_hat);
    } else if (method == "meanshift") {
        row.cc_hat = static_cast<double>(meanshift_count(*data.dataset.embeddings, cfg.meanshift_rank).k_hat);
    } else {
        throw ConfigError("unknown method '" + std::string(method) + "'");
    }
    row.rel_error = relative_error(row.cc_hat, data.cc_true);
    row.effort_fraction = effort_fraction(row.unique_pairs, n);
    return row;
}

}  // namespace

TrialRow run_trial(const ExperimentConfig& config, const ExperimentData& data, std::string_view method,
                   std::size_t budget, std::size_t trial) {
    return trial_impl(config, data, Proposals{}, method, budget, trial);
}

std::string format_double(double x) {
    if (!std::isfinite(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string trial_csv_header() {
    return "method,budget,trial,seed,config_hash,cc_hat,stderr,ci_low,ci_high,n_used,m_used,unique_pairs,draws,"
           "effort_fraction,rel_error";
}

std::string trial_csv_line(const TrialRow& r, std::uint64_t hash) {
    auto ci = [&](double x) { return r.has_ci ? format_double(x) : std::string(); };
    return r.method + "," + std::to_string(r.budget) + "," + std::to_string(r.trial) + "," + std::to_string(r.seed) +
           "," + hex64(hash) + "," + format_double(r.cc_hat) + "," + ci(r.stderr_) + "," + ci(r.ci_low) + "," +
           ci(r.ci_high) + "," + std::to_string(r.n_used) + "," + std::to_string(r.m_used) + "," +
           std::to_string(r.unique_pairs) + "," + std::to_string(r.draws) + "," + format_double(r.effort_fraction) +
           "," + format_double(r.rel_error);
}

namespace {

nlohmann::json num_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json summary_json(const CellResult& c, double cc_true) {
    const auto& s = c.summary;
    return {{"method", c.method},
            {"budget", c.budget},
            {"trials", s.trials},
            {"cc_true", cc_true},
            {"mean_estimate", s.mean_estimate},
            {"bias", s.bias},
            {"stderr_of_mean", s.stderr_of_mean},
            {"ci_trials", s.ci_trials},
            {"coverage", s.ci_trials ? nlohmann::json(s.coverage) : nlohmann::json(nullptr)},
            {"mean_rel_error", s.mean_rel_error},
            {"mean_ci_width", s.ci_trials ? num_or_null(s.mean_ci_width) : nlohmann::json(nullptr)},
            {"mean_unique_pairs", s.mean_unique_pairs},
            {"mean_effort_fraction", s.mean_effort_fraction}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + path.string());
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
    fs::path dir = cfg.output_dir;
    fs::create_directories(dir / "cells");
    std::string summary_csv =
        "method,budget,trials,cc_true,mean_estimate,bias,stderr_of_mean,ci_trials,coverage,mean_rel_error,"
        "mean_ci_width,mean_unique_pairs,mean_effort_fraction,config_hash\n";
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& c : res.cells) {
        std::string csv = trial_csv_header() + "\n";
        for (const auto& r : c.rows) csv += trial_csv_line(r, res.hash) + "\n";
        write_text(dir / "cells" / (c.method + "_T" + std::to_string(c.budget) + ".csv"), csv);

        const auto& s = c.summary;
        summary_csv += c.method + "," + std::to_string(c.budget) + "," + std::to_string(s.trials) + "," +
                       format_double(res.cc_true) + "," + format_double(s.mean_estimate) + "," +
                       format_double(s.bias) + "," + format_double(s.stderr_of_mean) + "," +
                       std::to_string(s.ci_trials) + "," + (s.ci_trials ? format_double(s.coverage) : "") + "," +
                       format_double(s.mean_rel_error) + "," + (s.ci_trials ? format_double(s.mean_ci_width) : "") +
                       "," + format_double(s.mean_unique_pairs) + "," + format_double(s.mean_effort_fraction) + "," +
                       hex64(res.hash) + "\n";
        summary.push_back(summary_json(c, res.cc_true));
    }
    write_text(dir / "summary.csv", summary_csv);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_text(dir / "config.json", res.resolved_config.dump(2) + "\n");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentData data = load_experiment_data(config);
    for (const auto& m : config.methods)
        if (needs_embeddings(m) && !data.dataset.embeddings)
            throw ConfigError("method '" + m + "' needs embeddings");

    Proposals props;
    auto wants = [&](std::string_view m) {
        return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
    };
    if (wants("nis")) props.similarity = ProposalPair::similarity_driven(data.model);
    if (wants("nmc")) props.uniform = ProposalPair::uniform(data.dataset.size());

    ExperimentResult res;
    res.cc_true = data.cc_true;
    res.hash = config_hash(config);
    res.resolved_config = config.to_json();
    res.resolved_config["config_hash"] = hex64(res.hash);
    res.resolved_config["n_items"] = data.dataset.size();
    res.resolved_config["cc_true"] = data.cc_true;

    // Budget-free methods are computed once per trial (coco and mean shift
    // once in total) and their rows repeated across the grid.
    struct Job {
        std::size_t cell;
        std::size_t trial;
    };
    std::vector<Job> jobs;
    for (const auto& m : config.methods)
        for (std::size_t b : config.budgets) {
            std::size_t cell = res.cells.size();
            res.cells.push_back({m, b, std::vector<TrialRow>(config.trials), {}});
            if (budget_free(m) && b != config.budgets.front()) continue;
            std::size_t count = (m == "coco" || m == "meanshift") ? 1 : config.trials;
            for (std::size_t t = 0; t < count; ++t) jobs.push_back({cell, t});
        }

    std::exception_ptr failure;
    std::mutex failure_mu;
    const int threads = config.threads > 0 ? config.threads : 0;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& cell = res.cells[jobs[j].cell];
        try {
            cell.rows[jobs[j].trial] = trial_impl(config, data, props, cell.method, cell.budget, jobs[j].trial);
        } catch (...) {
            std::lock_guard lk(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& cell : res.cells) {
        if (!budget_free(cell.method)) continue;
        const auto& first = *std::find_if(res.cells.begin(), res.cells.end(), [&](const CellResult& c) {
            return c.method == cell.method && c.budget == config.budgets.front();
        });
        for (std::size_t t = 0; t < config.trials; ++t) {
            TrialRow row = (cell.method == "kmeans") ? first.rows[t] : first.rows[0];
            row.budget = cell.budget;
            row.trial = t;
            row.seed = trial_seed(config.seed, t);
            cell.rows[t] = row;
        }
    }
    for (auto& cell : res.cells) cell.summary = summarize(cell.rows, data.cc_true);

    if (!config.output_dir.empty()) write_outputs(config, res);
    return res;
}

}  // namespace ccest
