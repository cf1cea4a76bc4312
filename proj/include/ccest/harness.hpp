#pragma once

#include "ccest/budget.hpp"
#include "ccest/dataset.hpp"
#include "ccest/estimator.hpp"
#include "ccest/metrics.hpp"
#include "ccest/similarity.hpp"
#include "ccest/synthetic.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccest {

inline constexpr std::string_view kMethods[] = {"kmeans", "coco", "meanshift", "pckmeans", "fft", "nmc", "nis"};
bool is_known_method(std::string_view name);

// Either a synthetic spec or files on disk. A similarity file, when given,
// replaces the cosine computed from embeddings.
struct DatasetSource {
    std::optional<SyntheticSpec> synthetic;
    std::string embeddings;
    std::string labels;
    std::string manifest;
    std::string similarity;
};

struct KRange {
    std::size_t lo = 2;
    std::size_t hi = 100;
    std::size_t step = 2;
};
// "lo:hi:step"; ConfigError when malformed.
KRange parse_k_range(std::string_view text);

struct ExperimentConfig {
    DatasetSource dataset;
    std::vector<std::string> methods{"nmc", "nis"};
    std::vector<std::size_t> budgets{1000, 2000, 4000, 8000};
    std::size_t trials = 20;
    std::uint64_t seed = 1;
    double tau = kDefaultTau;
    Calibration calibration = Calibration::GlobalMaxExp;
    BudgetPolicy policy = BudgetPolicy::Ratio;
    double policy_parameter = kDefaultRatio;
    double z = kDefaultZ;
    KRange k_range;
    double elbow_tolerance = 0.02;
    std::size_t kmeans_restarts = 3;
    std::size_t coco_thresholds = 40;
    std::size_t meanshift_rank = 1;  // neighbour rank behind the bandwidth
    int threads = 0;  // 0: OpenMP default
    std::string output_dir;

    // ConfigError on unknown methods, empty or non-increasing budgets,
    // zero trials or a missing dataset.
    void validate() const;
    nlohmann::json to_json() const;
};

// FNV-1a 64 of the canonical JSON dump of the resolved config.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hex64(std::uint64_t x);

struct ExperimentData {
    Dataset dataset;
    std::shared_ptr<const SimilarityModel> model;
    std::vector<int> codes;
    double cc_true = 0.0;
};

// Requires labels: the harness scores against ground truth.
ExperimentData load_experiment_data(const ExperimentConfig& config);

// Seed of trial t, shared by every method and budget so cells are paired.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial);

TrialRow run_trial(const ExperimentConfig& config, const ExperimentData& data, std::string_view method,
                   std::size_t budget, std::size_t trial);

struct CellResult {
    std::string method;
    std::size_t budget = 0;
    std::vector<TrialRow> rows;
    TrialSummary summary;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    double cc_true = 0.0;
    std::uint64_t hash = 0;
    nlohmann::json resolved_config;
};

// Runs every (method, budget) cell. When output_dir is set, writes
// cells/<method>_T<budget>.csv, summary.csv, summary.json and config.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string trial_csv_header();
std::string trial_csv_line(const TrialRow& row, std::uint64_t hash);
std::string format_double(double x);  // %.17g, empty for non-finite

}  // namespace ccest
