#include "ccest/proposals.hpp"

#include "ccest/errors.hpp"

#include <cmath>
#include <mutex>
#include <string>

namespace ccest {

ProposalMode proposal_mode_from_string(std::string_view name) {
    if (name == "uniform") return ProposalMode::Uniform;
    if (name == "similarity") return ProposalMode::Similarity;
    throw ConfigError("unknown proposal '" + std::string(name) + "' (expected uniform or similarity)");
}

std::string_view to_string(ProposalMode mode) {
    switch (mode) {
        case ProposalMode::Uniform: return "uniform";
        case ProposalMode::Similarity: return "similarity";
        case ProposalMode::Custom: return "custom";
    }
    return "unknown";
}

struct ProposalPair::Impl {
    ProposalMode mode = ProposalMode::Uniform;
    std::size_t n = 0;
    AliasTable vertex;
    RowWeights rows;
    bool full_support = true;
    std::shared_ptr<const SimilarityModel> model;
    std::unique_ptr<std::once_flag[]> once;
    std::unique_ptr<std::unique_ptr<AliasTable>[]> tables;

    void init_rows() {
        once = std::make_unique<std::once_flag[]>(n);
        tables = std::make_unique<std::unique_ptr<AliasTable>[]>(n);
    }

    const AliasTable& row(std::size_t u) const {
        std::call_once(once[u], [&] {
            std::vector<double> w(n, 0.0);
            rows(u, w);
            w[u] = 0.0;
            if (full_support) {
                for (std::size_t v = 0; v < n; ++v)
                    if (v != u && !(w[v] > 0.0))
                        throw StateError("neighbor proposal of vertex " + std::to_string(u) +
                                         " lacks support at " + std::to_string(v));
            }
            tables[u] = std::make_unique<AliasTable>(w);
        });
        return *tables[u];
    }
};

ProposalPair ProposalPair::uniform(std::size_t n) {
    if (n < 2) throw ValidationError("proposals need at least two items (no pairs exist)");
    auto impl = std::make_shared<Impl>();
    impl->mode = ProposalMode::Uniform;
    impl->n = n;
    impl->vertex = AliasTable(std::vector<double>(n, 1.0));
    return ProposalPair(std::move(impl));
}

ProposalPair ProposalPair::similarity_driven(std::shared_ptr<const SimilarityModel> model) {
    if (!model) throw ValidationError("similarity-driven proposals need a similarity model");
    const std::size_t n = model->size();
    if (n < 2) throw ValidationError("proposals need at least two items (no pairs exist)");
    // exp((c_min - c_max) / tau) must stay representable for q_u(v) > 0.
    if ((model->max_offdiag() - model->min_offdiag()) / model->tau() > 700.0)
        throw ValidationError("temperature too small: neighbor proposals would underflow to zero");

    std::vector<double> w(n);
    const auto deg = model->soft_degree();
    for (std::size_t u = 0; u < n; ++u) w[u] = 1.0 / (1.0 + deg[u]);

    auto impl = std::make_shared<Impl>();
    impl->mode = ProposalMode::Similarity;
    impl->n = n;
    impl->vertex = AliasTable(w);
    impl->model = model;
    impl->full_support = true;
    impl->rows = [m = model.get()](std::size_t u, std::span<double> out) { m->softmax_row(u, out); };
    impl->init_rows();
    for (std::size_t u = 0; u < n; ++u)
        if (!(impl->vertex.probability(u) > 0.0)) throw StateError("vertex proposal lacks support");
    return ProposalPair(std::move(impl));
}

ProposalPair ProposalPair::custom(std::vector<double> vertex_weights, RowWeights rows, bool require_full_support) {
    const std::size_t n = vertex_weights.size();
    if (n < 2) throw ValidationError("proposals need at least two items (no pairs exist)");
    if (!rows) throw ValidationError("custom proposals need a row-weight function");
    auto impl = std::make_shared<Impl>();
    impl->mode = ProposalMode::Custom;
    impl->n = n;
    impl->vertex = AliasTable(vertex_weights);
    impl->rows = std::move(rows);
    impl->full_support = require_full_support;
    impl->init_rows();
    if (require_full_support)
        for (std::size_t u = 0; u < n; ++u)
            if (!(impl->vertex.probability(u) > 0.0))
                throw ValidationError("vertex proposal lacks support at " + std::to_string(u));
    return ProposalPair(std::move(impl));
}

ProposalPair ProposalPair::build(ProposalMode mode, std::size_t n, std::shared_ptr<const SimilarityModel> model) {
    switch (mode) {
        case ProposalMode::Uniform: return uniform(n);
        case ProposalMode::Similarity: return similarity_driven(std::move(model));
        case ProposalMode::Custom: break;
    }
    throw ConfigError("custom proposals cannot be built by name");
}

ProposalMode ProposalPair::mode() const noexcept { return impl_->mode; }
std::size_t ProposalPair::size() const noexcept { return impl_->n; }

double ProposalPair::vertex_prob(std::size_t u) const { return impl_->vertex.probability(u); }

std::span<const double> ProposalPair::vertex_distribution() const { return impl_->vertex.probabilities(); }

double ProposalPair::neighbor_prob(std::size_t u, std::size_t v) const {
    if (u == v) return 0.0;
    if (impl_->mode == ProposalMode::Uniform) return 1.0 / static_cast<double>(impl_->n - 1);
    return impl_->row(u).probability(v);
}

std::vector<double> ProposalPair::neighbor_distribution(std::size_t u) const {
    if (u >= impl_->n) throw ValidationError("vertex index out of range");
    std::vector<double> out(impl_->n);
    for (std::size_t v = 0; v < impl_->n; ++v) out[v] = neighbor_prob(u, v);
    return out;
}

VertexSample ProposalPair::sample_vertex(Rng& rng) const {
    if (impl_->mode == ProposalMode::Uniform) {
        const std::size_t u = rng.uniform_index(impl_->n);
        return {u, impl_->vertex.probability(u)};
    }
    const std::size_t u = impl_->vertex.sample(rng);
    return {u, impl_->vertex.probability(u)};
}

std::vector<NeighborSample> ProposalPair::sample_neighbors(std::size_t u, std::size_t m, Rng& rng) const {
    if (m < 1) throw ValidationError("sample_neighbors: M must be at least 1");
    if (u >= impl_->n) throw ValidationError("vertex index out of range");
    std::vector<NeighborSample> out;
    out.reserve(m);
    if (impl_->mode == ProposalMode::Uniform) {
        const double q = 1.0 / static_cast<double>(impl_->n - 1);
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t v = rng.uniform_index(impl_->n - 1);
            if (v >= u) ++v;
            out.push_back({v, q});
        }
        return out;
    }
    const AliasTable& table = impl_->row(u);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t v = table.sample(rng);
        out.push_back({v, table.probability(v)});
    }
    return out;
}

ProposalPair exact_proposals(const TrueSimilarityOracle& oracle) {
    const auto codes = oracle.codes();
    const auto profile = DegreeProfile::from_labels(codes);
    std::vector<double> w(codes.size());
    for (std::size_t u = 0; u < w.size(); ++u) w[u] = 1.0 / (1.0 + profile.degrees[u]);
    std::vector<int> owned(codes.begin(), codes.end());
    auto rows = [owned = std::move(owned)](std::size_t u, std::span<double> out) {
        bool any = false;
        for (std::size_t v = 0; v < out.size(); ++v) {
            out[v] = (v != u && owned[v] == owned[u]) ? 1.0 : 0.0;
            any = any || out[v] > 0.0;
        }
        if (!any)
            for (std::size_t v = 0; v < out.size(); ++v) out[v] = v == u ? 0.0 : 1.0;
    };
    return ProposalPair::custom(std::move(w), std::move(rows), /*require_full_support=*/false);
}

}  // namespace ccest
