#pragma once

#include "ccest/alias_table.hpp"
#include "ccest/graph.hpp"
#include "ccest/rng.hpp"
#include "ccest/similarity.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace ccest {

enum class ProposalMode { Uniform, Similarity, Custom };

ProposalMode proposal_mode_from_string(std::string_view name);
std::string_view to_string(ProposalMode mode);

struct VertexSample {
    std::size_t u = 0;
    double q_vertex = 0.0;
};

struct NeighborSample {
    std::size_t v = 0;
    double q_neighbor = 0.0;
};

/// The two importance-sampling proposals: Q over vertices and q_u over the
/// neighbors v != u of each vertex. A ProposalPair is an immutable handle;
/// copies share state and may be used from any number of threads, each
/// with its own Rng. Neighbor tables are built lazily, once per vertex.
class ProposalPair {
public:
    // Fills weights[v] for v != u; weights[u] is ignored.
    using RowWeights = std::function<void(std::size_t u, std::span<double> weights)>;

    // Q(u) = 1/n, q_u(v) = 1/(n-1).
    static ProposalPair uniform(std::size_t n);
    // Q(u) proportional to 1/(1 + D~(u)), q_u(v) = row softmax s^(u, v).
    static ProposalPair similarity_driven(std::shared_ptr<const SimilarityModel> model);
    // When require_full_support is set, every Q(u) and q_u(v) (v != u) must be
    // positive; rows are checked as they are built.
    static ProposalPair custom(std::vector<double> vertex_weights, RowWeights rows, bool require_full_support = true);

    static ProposalPair build(ProposalMode mode, std::size_t n, std::shared_ptr<const SimilarityModel> model);

    ProposalMode mode() const noexcept;
    std::size_t size() const noexcept;

    double vertex_prob(std::size_t u) const;
    double neighbor_prob(std::size_t u, std::size_t v) const;
    std::span<const double> vertex_distribution() const;
    std::vector<double> neighbor_distribution(std::size_t u) const;

    VertexSample sample_vertex(Rng& rng) const;
    std::vector<NeighborSample> sample_neighbors(std::size_t u, std::size_t m, Rng& rng) const;

private:
    struct Impl;
    explicit ProposalPair(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<Impl> impl_;
};

// The zero-variance proposals built from ground truth:
// Q(u) proportional to 1/(1 + d(u)) and q_u(v) = s(u, v) / d(u)
// (uniform for singletons, whose degree estimate is 0 regardless).
ProposalPair exact_proposals(const TrueSimilarityOracle& oracle);

}  // namespace ccest
