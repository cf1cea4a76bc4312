// ccest: cluster-count estimation from same/different pair queries.
//
//   ccest synth    --out DIR [--n 1000 --k 50 ...]
//   ccest estimate --embeddings E --labels L --budget 4000
//   ccest bench    --synthetic --baseline nmc,nis --budget 1000,2000 --trials 50 --out DIR
//   ccest serve    --embeddings E --data-dir D --port 8080

#include "ccest/errors.hpp"
#include "ccest/harness.hpp"
#include "ccest/kernels.hpp"
#include "ccest/metrics.hpp"
#include "ccest/run_record.hpp"
#include "ccest/server.hpp"
#include "ccest/session.hpp"
#include "ccest/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

using namespace ccest;
using json = nlohmann::json;

namespace {

struct DataOptions {
    bool synthetic = false;
    SyntheticSpec spec;
    std::string sizes = "zipf";
    std::string embeddings, labels, manifest, similarity;
};

void add_synthetic_options(CLI::App* app, DataOptions& d) {
    app->add_option("--n", d.spec.n, "Synthetic item count")->capture_default_str();
    app->add_option("--k", d.spec.k, "Synthetic cluster count")->capture_default_str();
    app->add_option("--sizes", d.sizes, "Cluster sizes: zipf or balanced")->capture_default_str();
    app->add_option("--zipf-s", d.spec.zipf_s, "Zipf exponent")->capture_default_str();
    app->add_option("--dim", d.spec.dim, "Embedding dimension")->capture_default_str();
    app->add_option("--within", d.spec.within_sim, "Mean same-cluster cosine")->capture_default_str();
    app->add_option("--cross", d.spec.cross_sim, "Mean cross-cluster cosine")->capture_default_str();
    app->add_option("--noise", d.spec.noise_sigma, "Noise sigma (negative: derive from --within)")->capture_default_str();
    app->add_option("--data-seed", d.spec.seed, "Seed of the synthetic instance")->capture_default_str();
}

void add_data_options(CLI::App* app, DataOptions& d) {
    app->add_flag("--synthetic", d.synthetic, "Generate the dataset instead of loading files");
    add_synthetic_options(app, d);
    app->add_option("--embeddings", d.embeddings, "Embedding matrix file");
    app->add_option("--labels", d.labels, "Ground-truth labels, one per line");
    app->add_option("--manifest", d.manifest, "Item ids and image URIs, tab separated");
    app->add_option("--similarity", d.similarity, "Precomputed cosine matrix file");
}

DatasetSource to_source(DataOptions& d) {
    DatasetSource src;
    if (d.synthetic) {
        d.spec.size_dist = size_distribution_from_string(d.sizes);
        src.synthetic = d.spec;
    }
    src.embeddings = d.embeddings;
    src.labels = d.labels;
    src.manifest = d.manifest;
    src.similarity = d.similarity;
    return src;
}

// Dataset plus model for estimate/serve; labels optional.
std::pair<Dataset, std::shared_ptr<const SimilarityModel>> load_for_run(DataOptions& d, double tau, Calibration calib) {
    DatasetSource src = to_source(d);
    Dataset ds;
    if (src.synthetic) {
        ds = generate_synthetic(*src.synthetic);
    } else if (!src.embeddings.empty()) {
        std::optional<std::filesystem::path> labels, manifest;
        if (!src.labels.empty()) labels = src.labels;
        if (!src.manifest.empty()) manifest = src.manifest;
        ds = load_dataset(src.embeddings, labels, manifest);
    }
    std::shared_ptr<const SimilarityModel> model;
    if (!src.similarity.empty()) {
        auto m = load_similarity(src.similarity, tau, calib);
        if (ds.size() == 0) {
            std::optional<std::vector<std::string>> labels;
            if (!src.labels.empty()) labels = read_labels(src.labels);
            ds = make_dataset(std::nullopt, std::move(labels), m.size());
            if (!src.manifest.empty()) {
                auto entries = read_manifest(src.manifest);
                if (entries.size() != ds.size()) throw ConsistencyError("manifest and similarity differ in length");
                std::vector<std::string> refs;
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    ds.item_ids[i] = entries[i].item_id;
                    refs.push_back(entries[i].image_uri);
                }
                ds.image_refs = std::move(refs);
                ds.validate();
            }
        }
        model = std::make_shared<const SimilarityModel>(std::move(m));
    } else if (ds.embeddings) {
        model = std::make_shared<const SimilarityModel>(SimilarityModel::from_embeddings(*ds.embeddings, tau, calib));
    } else {
        throw ConfigError("need --synthetic, --embeddings or --similarity");
    }
    return {std::move(ds), std::move(model)};
}

void write_json(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

SessionServer* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int fail(ErrorKind kind, const std::string& message, int code = 2) {
    json err = {{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}};
    std::cerr << err.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster-count estimation with nested importance sampling"};
    app.set_config("--config", "", "TOML file; command-line flags override it");
    app.require_subcommand(1);
    std::string isa;
    app.add_option("--isa", isa, "Kernel variant: scalar, avx2 or neon (default: best available)");

    // common run parameters
    double tau = kDefaultTau;
    std::string calibration = "global-max-exp";
    std::uint64_t seed = 1;
    double ratio = kDefaultRatio;
    std::string policy = "ratio";
    double alpha = 0.5;
    double z = kDefaultZ;
    auto add_model_options = [&](CLI::App* sub) {
        sub->add_option("--tau", tau, "Softmax temperature")->capture_default_str();
        sub->add_option("--calibration", calibration, "Soft-degree calibration: global-max-exp, affine-clip, fixed-sigmoid")
            ->capture_default_str();
    };
    auto add_plan_options = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Run seed")->capture_default_str();
        sub->add_option("--ratio", ratio, "Sampling ratio r = M / N")->capture_default_str();
        sub->add_option("--policy", policy, "Budget split: ratio or sqrt-alloc")->capture_default_str();
        sub->add_option("--alpha", alpha, "Exponent for sqrt-alloc, N = T^alpha")->capture_default_str();
        sub->add_option("--z", z, "Normal quantile of the confidence interval")->capture_default_str();
    };

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset to files");
    DataOptions synth_data;
    std::string synth_out;
    bool synth_similarity = false;
    add_synthetic_options(synth, synth_data);
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_flag("--write-similarity", synth_similarity, "Also write the cosine matrix");

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate the cluster count, answering queries from labels");
    DataOptions est_data;
    std::size_t budget = 4000;
    std::size_t est_trials = 1;
    std::string proposal = "similarity";
    double stop_rel_width = 0.0;
    std::size_t stop_min = kDefaultStopMinVertices;
    std::string est_out;
    add_data_options(est, est_data);
    add_model_options(est);
    add_plan_options(est);
    est->add_option("--budget", budget, "Pair-draw budget T")->capture_default_str();
    est->add_option("--proposal", proposal, "similarity (NIS) or uniform (NMC)")->capture_default_str();
    est->add_option("--stop-rel-width", stop_rel_width, "Stop once CI width / estimate falls below this (0: off)")
        ->capture_default_str();
    est->add_option("--stop-min-vertices", stop_min, "Vertices required before the width rule applies")->capture_default_str();
    est->add_option("--trials", est_trials, "Independent runs; more than one prints a summary")->capture_default_str();
    est->add_option("--out", est_out, "Where to write the run record (default stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "Run multi-method, multi-trial sweeps");
    DataOptions bench_data;
    ExperimentConfig bcfg;
    std::string k_range = "2:100:2";
    add_data_options(bench, bench_data);
    add_model_options(bench);
    add_plan_options(bench);
    bench->add_option("--baseline,--methods", bcfg.methods, "Methods: kmeans coco meanshift pckmeans fft nmc nis")
        ->delimiter(',');
    bench->add_option("--budget,--budgets", bcfg.budgets, "Budget grid T, strictly increasing")->delimiter(',');
    bench->add_option("--trials", bcfg.trials, "Trials per cell")->capture_default_str();
    bench->add_option("--k-range", k_range, "k sweep lo:hi:step for k-means and pc k-means")->capture_default_str();
    bench->add_option("--elbow-tol", bcfg.elbow_tolerance, "Elbow slope tolerance")->capture_default_str();
    bench->add_option("--restarts", bcfg.kmeans_restarts, "k-means restarts")->capture_default_str();
    bench->add_option("--meanshift-rank", bcfg.meanshift_rank,
                      "mean-shift bandwidth: mean distance to this neighbour rank")
        ->capture_default_str();
    bench->add_option("--thresholds", bcfg.coco_thresholds, "Number of CoCo thresholds")->capture_default_str();
    bench->add_option("--threads", bcfg.threads, "Worker threads (0: all cores)")->capture_default_str();
    bench->add_option("--out", bcfg.output_dir, "Output directory")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Run the vetting session service");
    DataOptions serve_data;
    ServerOptions sopt;
    std::string data_dir = "ccest-data", dataset_name = "default", images_root, ui_dir;
    add_data_options(serve, serve_data);
    add_model_options(serve);
    serve->add_option("--port", sopt.port, "Port (0: pick a free one)")->capture_default_str();
    serve->add_option("--host", sopt.host, "Bind address")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Directory for session logs")->capture_default_str();
    serve->add_option("--dataset-name", dataset_name, "Name sessions use to refer to the dataset")->capture_default_str();
    serve->add_option("--images-root", images_root, "Directory served at /images");
    serve->add_option("--ui-dir", ui_dir, "Built UI bundle served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(ErrorKind::Config, e.what());
    }

    try {
        if (!isa.empty()) kernels::select(kernels::isa_from_string(isa));
        const Calibration calib = calibration_from_string(calibration);

        if (*synth) {
            synth_data.spec.size_dist = size_distribution_from_string(synth_data.sizes);
            Dataset ds = generate_synthetic(synth_data.spec);
            std::filesystem::path dir = synth_out;
            std::filesystem::create_directories(dir);
            write_embeddings(dir / "embeddings.bin", *ds.embeddings);
            write_labels(dir / "labels.txt", *ds.labels);
            std::vector<ManifestEntry> manifest;
            for (const auto& id : ds.item_ids) manifest.push_back({id, ""});
            write_manifest(dir / "manifest.tsv", manifest);
            if (synth_similarity)
                save_similarity(dir / "similarity.bin", SimilarityModel::from_embeddings(*ds.embeddings, tau, calib));
            auto codes = encode_labels(*ds.labels);
            json info = {{"n", ds.size()},
                         {"dim", ds.dim()},
                         {"clusters", exact_cc_unionfind(std::span<const int>(codes))},
                         {"dir", dir.string()}};
            std::cout << info.dump() << "\n";
            return 0;
        }

        if (*est) {
            auto [ds, model] = load_for_run(est_data, tau, calib);
            if (!ds.labels) throw ConfigError("estimate answers queries from --labels; use serve for human answers");
            TrueSimilarityOracle oracle(*ds.labels);
            auto pp = proposal == "uniform"      ? ProposalPair::uniform(ds.size())
                      : proposal == "similarity" ? ProposalPair::similarity_driven(model)
                                                 : throw ConfigError("proposal must be similarity or uniform");
            auto plan = plan_budget(budget, budget_policy_from_string(policy),
                                    policy == "ratio" ? ratio : alpha);
            RunConfig rc;
            rc.mode = proposal == "uniform" ? EstimatorMode::NMC : EstimatorMode::NIS;
            rc.z = z;
            rc.stop_rel_width = stop_rel_width;
            rc.stop_min_vertices = stop_min;
            const double cc_true = static_cast<double>(oracle.cluster_count());
            RunRecordContext ctx{tau, calib, &ds.item_ids};
            if (est_trials <= 1) {
                rc.seed = seed;
                auto result = run_nis(pp, plan, rc, oracle);
                json record = run_record(result.run, ctx);
                record["cc_true"] = cc_true;
                write_json(est_out, record);
                return 0;
            }
            std::vector<TrialRow> rows(est_trials);
            for (std::size_t t = 0; t < est_trials; ++t) {
                rc.seed = trial_seed(seed, t);
                auto e = *run_nis(pp, plan, rc, oracle).estimate;
                rows[t] = {.method = proposal == "uniform" ? "nmc" : "nis", .budget = budget, .trial = t, .seed = rc.seed,
                           .cc_hat = e.cc_hat, .stderr_ = e.stderr_, .ci_low = e.ci_low, .ci_high = e.ci_high,
                           .n_used = e.n_used, .m_used = e.m_used, .unique_pairs = e.effort_unique_pairs,
                           .draws = e.total_draws, .effort_fraction = e.effort_fraction,
                           .rel_error = relative_error(e.cc_hat, cc_true), .has_ci = true};
            }
            auto s = summarize(rows, cc_true);
            write_json(est_out, {{"cc_true", cc_true},
                                 {"plan", to_json(plan)},
                                 {"trials", s.trials},
                                 {"mean_estimate", s.mean_estimate},
                                 {"bias", s.bias},
                                 {"stderr_of_mean", s.stderr_of_mean},
                                 {"coverage", s.coverage},
                                 {"mean_rel_error", s.mean_rel_error},
                                 {"mean_ci_width", s.mean_ci_width},
                                 {"mean_unique_pairs", s.mean_unique_pairs}});
            return 0;
        }

        if (*bench) {
            bcfg.dataset = to_source(bench_data);
            bcfg.seed = seed;
            bcfg.tau = tau;
            bcfg.calibration = calib;
            bcfg.policy = budget_policy_from_string(policy);
            bcfg.policy_parameter = bcfg.policy == BudgetPolicy::Ratio ? ratio : alpha;
            bcfg.z = z;
            bcfg.k_range = parse_k_range(k_range);
            auto res = run_experiment(bcfg);
            json brief = json::array();
            for (const auto& c : res.cells)
                brief.push_back({{"method", c.method},
                                 {"budget", c.budget},
                                 {"mean_estimate", c.summary.mean_estimate},
                                 {"mean_rel_error", c.summary.mean_rel_error}});
            std::cout << json{{"cc_true", res.cc_true}, {"config_hash", hex64(res.hash)}, {"cells", brief}}.dump(2)
                      << "\n";
            return 0;
        }

        if (*serve) {
            auto [ds, model] = load_for_run(serve_data, tau, calib);
            SessionManager manager(data_dir);
            manager.add_dataset(ServedDataset::make(dataset_name, std::move(ds), model));
            std::vector<std::string> skipped;
            std::size_t restored = manager.restore(&skipped);
            for (const auto& s : skipped) std::cerr << "skipped session log " << s << "\n";
            sopt.images_root = images_root;
            sopt.ui_dir = ui_dir;
            SessionServer server(manager, sopt);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            int port = sopt.port;
            if (port == 0) {
                port = server.bind_any_port();
                if (port < 0) throw ConfigError("could not bind a port on " + sopt.host);
            }
            std::cout << json{{"listening", sopt.host}, {"port", port}, {"restored_sessions", restored}}.dump()
                      << std::endl;
            bool ok = sopt.port == 0 ? server.listen_after_bind() : server.listen();
            g_server = nullptr;
            if (!ok && sopt.port != 0) throw ConfigError("could not listen on " + sopt.host + ":" + std::to_string(port));
            return 0;
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail(ErrorKind::State, e.what(), 1);
    }
    return 0;
}
