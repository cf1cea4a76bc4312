#include "ccest/baselines/fft.hpp"

#include "ccest/kernels.hpp"
#include "ccest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ccest {

FftMetric FftMetric::euclidean(const MatrixF& embeddings) { return FftMetric(&embeddings, true); }
FftMetric FftMetric::cosine(const MatrixF& cosine) { return FftMetric(&cosine, false); }

void FftMetric::distances_from(std::size_t u, std::span<double> out) const {
    const std::size_t n = m_->rows();
    if (euclid_) {
        kernels::active().sq_dist_rows(m_->row(u).data(), m_->data().data(), n, m_->cols(), out.data());
        for (std::size_t v = 0; v < n; ++v) out[v] = std::sqrt(out[v]);
    } else {
        auto row = m_->row(u);
        for (std::size_t v = 0; v < n; ++v) out[v] = 1.0 - static_cast<double>(row[v]);
        out[u] = 0.0;
    }
}

FftResult fft_estimate(const FftMetric& metric, const PairAnswerFn& answer, std::size_t budget,
                       std::uint64_t seed) {
    const std::size_t n = metric.size();
    FftResult r;
    FftState& st = r.state;
    if (n == 0) return r;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed, Stream::Fft);
    rng.shuffle(perm.begin(), perm.end());

    std::vector<double> mindist(n, std::numeric_limits<double>::infinity()), dist(n);
    std::vector<char> taken(n, 0);

    auto commit = [&](std::size_t u) {
        st.sampled.push_back(u);
        taken[u] = 1;
        for (std::size_t v = 0; v < n; ++v) mindist[v] = std::min(mindist[v], dist[v]);
    };

    metric.distances_from(perm[0], dist);
    st.individuals.push_back({perm[0]});
    commit(perm[0]);

    std::vector<std::size_t> order;
    while (st.sampled.size() < n && st.queries_used < budget) {
        // argmax of distance to the sampled set; scanning in shuffled order
        // makes the first maximum the tie-break.
        std::size_t u = n;
        double best = -1.0;
        for (std::size_t p : perm)
            if (!taken[p] && mindist[p] > best) {
                best = mindist[p];
                u = p;
            }
        metric.distances_from(u, dist);

        order.resize(st.individuals.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return dist[st.individuals[a][0]] < dist[st.individuals[b][0]];
        });

        std::size_t matched = order.size(), cost = 0;
        for (std::size_t j : order) {
            if (st.queries_used == budget) break;
            std::size_t rep = st.individuals[j][0];
            int a = answer(u, rep);
            ++st.queries_used;
            ++cost;
            st.log.push_back({u, rep, a});
            if (a) {
                matched = j;
                break;
            }
        }
        if (matched == order.size() && st.queries_used == budget) break;

        if (matched < order.size())
            st.individuals[matched].push_back(u);
        else
            st.individuals.push_back({u});
        st.step_costs.push_back(cost);
        commit(u);
    }
    r.k_hat = st.individuals.size();
    return r;
}

ConstraintSet fft_constraints(const FftState& state, double alpha, double beta) {
    ConstraintSet cs;
    cs.alpha = alpha;
    cs.beta = beta;
    for (const auto& q : state.log) {
        if (q.answer)
            cs.add_must_link(q.u, q.representative);
        else
            cs.add_cannot_link(q.u, q.representative);
    }
    return cs;
}

}  // namespace ccest
