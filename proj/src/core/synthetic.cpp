#include "ccest/synthetic.hpp"

#include "ccest/alias_table.hpp"
#include "ccest/errors.hpp"
#include "ccest/kernels.hpp"
#include "ccest/rng.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace ccest {

SizeDistribution size_distribution_from_string(std::string_view name) {
    if (name == "balanced") return SizeDistribution::Balanced;
    if (name == "zipf") return SizeDistribution::Zipf;
    throw ConfigError("unknown size distribution '" + std::string(name) + "' (expected balanced or zipf)");
}

std::string_view to_string(SizeDistribution d) { return d == SizeDistribution::Balanced ? "balanced" : "zipf"; }

void SyntheticSpec::validate() const {
    if (n < 1) throw ValidationError("synthetic: n must be at least 1");
    if (k < 1 || k > n) throw ValidationError("synthetic: need 1 <= K <= n (K=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    if (dim < 1) throw ValidationError("synthetic: dim must be at least 1");
    if (size_dist == SizeDistribution::Zipf && !(zipf_s > 0.0)) throw ValidationError("synthetic: zipf exponent must be positive");
    if (!(within_sim > cross_sim)) throw ValidationError("synthetic: within_sim must exceed cross_sim");
    if (!(within_sim > 0.0 && within_sim <= 1.0)) throw ValidationError("synthetic: within_sim must be in (0, 1]");
    if (!(cross_sim >= 0.0)) throw ValidationError("synthetic: cross_sim must be non-negative");
}

double SyntheticSpec::effective_sigma() const {
    if (noise_sigma >= 0.0) return noise_sigma;
    return std::sqrt(1.0 / within_sim - 1.0);
}

std::vector<std::size_t> draw_cluster_sizes(const SyntheticSpec& spec) {
    spec.validate();
    std::vector<std::size_t> sizes(spec.k, 1);
    if (spec.size_dist == SizeDistribution::Balanced) {
        for (std::size_t c = 0; c < spec.k; ++c) sizes[c] = spec.n / spec.k + (c < spec.n % spec.k ? 1 : 0);
        return sizes;
    }
    std::vector<double> w(spec.k);
    for (std::size_t c = 0; c < spec.k; ++c) w[c] = std::pow(static_cast<double>(c + 1), -spec.zipf_s);
    const AliasTable table(w);
    Rng rng(spec.seed, Stream::Synthetic, 1);
    for (std::size_t i = spec.k; i < spec.n; ++i) ++sizes[table.sample(rng)];
    return sizes;
}

namespace {

void random_unit(Rng& rng, std::span<double> out) {
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : out) {
            x = rng.normal();
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : out) x /= norm;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto sizes = draw_cluster_sizes(spec);
    const std::size_t d = spec.dim;
    const double sigma = spec.effective_sigma();
    const double within = sigma > 0.0 ? 1.0 / (1.0 + sigma * sigma) : 1.0;
    // Center-center cosine rho so that member-member cross cosine ~ rho * within.
    const double rho = std::min(spec.cross_sim / std::max(within, spec.within_sim), 0.999);

    Rng rng(spec.seed, Stream::Synthetic, 2);
    std::vector<double> shared(d), dir(d);
    random_unit(rng, shared);
    MatrixD centers(spec.k, d);
    for (std::size_t c = 0; c < spec.k; ++c) {
        random_unit(rng, dir);
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            centers(c, j) = std::sqrt(rho) * shared[j] + std::sqrt(1.0 - rho) * dir[j];
            norm += centers(c, j) * centers(c, j);
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) centers(c, j) /= norm;
    }

    std::vector<std::size_t> cluster_of;
    cluster_of.reserve(spec.n);
    for (std::size_t c = 0; c < spec.k; ++c) cluster_of.insert(cluster_of.end(), sizes[c], c);
    rng.shuffle(cluster_of.begin(), cluster_of.end());

    MatrixF emb(spec.n, d);
    std::vector<double> x(d);
    const double scale = sigma / std::sqrt(static_cast<double>(d));
    std::vector<std::string> labels;
    labels.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t c = cluster_of[i];
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = centers(c, j) + (sigma > 0.0 ? scale * rng.normal() : 0.0);
            norm += x[j] * x[j];
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) emb(i, j) = static_cast<float>(x[j] / norm);
        char buf[16];
        std::snprintf(buf, sizeof buf, "c%03zu", c);
        labels.emplace_back(buf);
    }
    return make_dataset(std::move(emb), std::move(labels));
}

}  // namespace ccest
