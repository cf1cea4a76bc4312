#pragma once

#include "ccest/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ccest {

enum class SizeDistribution { Balanced, Zipf };

SizeDistribution size_distribution_from_string(std::string_view name);
std::string_view to_string(SizeDistribution d);

/// Clustered unit-norm embeddings. Members are center + isotropic noise of
/// norm ~noise_sigma, renormalized; centers share a common direction so that
/// same-cluster pairs average cosine within_sim and cross-cluster pairs
/// average cross_sim. A negative noise_sigma derives it from within_sim.
struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t k = 50;
    SizeDistribution size_dist = SizeDistribution::Zipf;
    double zipf_s = 1.5;
    std::size_t dim = 64;
    double within_sim = 0.75;
    double cross_sim = 0.15;
    double noise_sigma = -1.0;
    std::uint64_t seed = 1;

    void validate() const;
    double effective_sigma() const;
};

// Cluster sizes summing to n, each at least 1. Balanced splits evenly
// (remainder to the first clusters); Zipf gives each cluster one member and
// draws the rest with probability proportional to rank^-s.
std::vector<std::size_t> draw_cluster_sizes(const SyntheticSpec& spec);

// Labels are "c000", "c001", ...; item order is shuffled.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace ccest
