#include "ccest/alias_table.hpp"
#include "ccest/errors.hpp"
#include "ccest/graph.hpp"
#include "ccest/proposals.hpp"
#include "ccest/similarity.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace ccest;

namespace {

std::shared_ptr<const SimilarityModel> model_from(const MatrixF& e, double tau = 0.5) {
    return std::make_shared<const SimilarityModel>(SimilarityModel::from_embeddings(e, tau));
}

// Max |empirical CDF - true CDF| over the support.
double ks_distance(const std::vector<std::size_t>& counts, std::span<const double> p, std::size_t draws) {
    double cf = 0, ct = 0, worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cf += static_cast<double>(counts[i]) / static_cast<double>(draws);
        ct += p[i];
        worst = std::max(worst, std::abs(cf - ct));
    }
    return worst;
}

}  // namespace

TEST_CASE("uniform proposals") {
    auto pp = ProposalPair::uniform(4);
    for (std::size_t u = 0; u < 4; ++u) CHECK(pp.vertex_prob(u) == 0.25);
    CHECK(pp.neighbor_prob(0, 3) == doctest::Approx(1.0 / 3.0));
    CHECK(pp.neighbor_prob(2, 2) == 0.0);
    CHECK_THROWS_AS(ProposalPair::uniform(1), ValidationError);
}

TEST_CASE("similarity proposals: symmetry and the isolated point") {
    MatrixF eq(4, 4, 0.0f);
    for (std::size_t i = 0; i < 4; ++i) eq(i, i) = 1.0f;  // all pairwise cosines 0
    auto pp = ProposalPair::similarity_driven(model_from(eq));
    for (std::size_t u = 0; u < 4; ++u) CHECK(pp.vertex_prob(u) == doctest::Approx(0.25));

    MatrixF e(4, 3, std::vector<float>{1, 0.05f, 0, 1, -0.05f, 0, 1, 0, 0.05f, 0, 0, 1});
    auto pp2 = ProposalPair::similarity_driven(model_from(e));
    for (std::size_t u = 0; u < 3; ++u) CHECK(pp2.vertex_prob(3) > pp2.vertex_prob(u));
    // Q(u) proportional to 1 / (1 + D~(u)).
    auto model = model_from(e);
    auto sd = model->soft_degree();
    double z = 0;
    for (double d : sd) z += 1.0 / (1.0 + d);
    for (std::size_t u = 0; u < 4; ++u) CHECK(pp2.vertex_prob(u) == doctest::Approx(1.0 / (1.0 + sd[u]) / z));
}

TEST_CASE("proposal invariants hold on random instances") {
    Rng rng(31);
    MatrixF e(60, 5);
    for (auto& x : e.data()) x = static_cast<float>(rng.normal());
    auto model = model_from(e, 0.2);
    auto pp = ProposalPair::similarity_driven(model);
    double total = 0;
    for (double q : pp.vertex_distribution()) {
        CHECK(q > 0.0);
        total += q;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    std::vector<double> srow(60);
    for (std::size_t u = 0; u < 60; ++u) {
        auto q = pp.neighbor_distribution(u);
        model->softmax_row(u, srow);
        double s = 0;
        for (std::size_t v = 0; v < 60; ++v) {
            s += q[v];
            if (v == u) CHECK(q[v] == 0.0);
            else {
                CHECK(q[v] > 0.0);
                CHECK(q[v] == doctest::Approx(srow[v]).epsilon(1e-12));
            }
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("degenerate vertex distribution always draws its atom") {
    auto pp = ProposalPair::custom({1.0, 0.0, 0.0, 0.0},
                                   [](std::size_t u, std::span<double> w) {
                                       for (std::size_t v = 0; v < w.size(); ++v) w[v] = v == u ? 0.0 : 1.0;
                                   },
                                   false);
    Rng rng(32);
    for (int i = 0; i < 1000; ++i) CHECK(pp.sample_vertex(rng).u == 0);
    CHECK_THROWS_AS(ProposalPair::custom({1.0, 0.0, 0.0}, [](std::size_t, std::span<double>) {}, true),
                    ValidationError);
}

TEST_CASE("uniform vertex draws pass a chi-square test") {
    const std::size_t n = 20, draws = 100000;
    auto pp = ProposalPair::uniform(n);
    Rng rng(33);
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t i = 0; i < draws; ++i) ++counts[pp.sample_vertex(rng).u];
    const double expected = static_cast<double>(draws) / n;
    double chi2 = 0;
    for (auto c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
        // per-vertex 3 sigma band
        CHECK(std::abs(c - expected) < 3.0 * std::sqrt(expected * (1.0 - 1.0 / n)) + 1.0);
    }
    // chi-square(19) 99.9% quantile is 43.8
    CHECK(chi2 < 43.8);
}

TEST_CASE("alias sampling stays within the DKW band") {
    Rng rng(34);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> w(1 + rng.uniform_index(50));
        for (auto& x : w) x = rng.uniform01() < 0.2 ? 0.0 : std::exp(2.0 * rng.normal());
        w[0] += 0.1;
        AliasTable table(w);
        const std::size_t draws = 100000;
        std::vector<std::size_t> counts(w.size(), 0);
        for (std::size_t i = 0; i < draws; ++i) ++counts[table.sample(rng)];
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] == 0.0) CHECK(counts[i] == 0);
        // P(sup |F_n - F| > eps) <= 2 exp(-2 n eps^2) = 0.01
        const double eps = std::sqrt(std::log(2.0 / 0.01) / (2.0 * draws));
        CHECK(ks_distance(counts, table.probabilities(), draws) < eps);
    }
    CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(AliasTable(std::vector<double>{1.0, -0.5}), ValidationError);
}

TEST_CASE("neighbor draws: single neighbor, concentration, positivity") {
    auto pp2 = ProposalPair::uniform(2);
    Rng rng(35);
    for (auto s : pp2.sample_neighbors(1, 17, rng)) {
        CHECK(s.v == 0);
        CHECK(s.q_neighbor == 1.0);
    }

    auto skewed = ProposalPair::custom(std::vector<double>(10, 1.0), [](std::size_t u, std::span<double> w) {
        for (std::size_t v = 0; v < w.size(); ++v) w[v] = v == u ? 0.0 : 0.01 / 8.0;
        w[(u + 1) % w.size()] = 0.99;
    });
    auto draws = skewed.sample_neighbors(4, 10000, rng);
    std::size_t hits = 0;
    for (auto& d : draws) {
        CHECK(d.q_neighbor > 0.0);
        CHECK(d.v != 4);
        hits += d.v == 5;
    }
    CHECK(hits >= 9500);
}

TEST_CASE("a fixed seed reproduces the draw sequence") {
    Rng rng(36);
    MatrixF e(30, 4);
    for (auto& x : e.data()) x = static_cast<float>(rng.normal());
    auto pp = ProposalPair::similarity_driven(model_from(e));
    auto sequence = [&](std::uint64_t seed) {
        Rng r(seed);
        std::vector<std::size_t> out;
        for (int i = 0; i < 50; ++i) {
            auto vs = pp.sample_vertex(r);
            out.push_back(vs.u);
            for (auto& nb : pp.sample_neighbors(vs.u, 5, r)) out.push_back(nb.v);
        }
        return out;
    };
    CHECK(sequence(7) == sequence(7));
    CHECK(sequence(7) != sequence(8));
}

TEST_CASE("exact proposals follow the true degrees") {
    std::vector<int> labels{0, 0, 0, 1, 1, 2};
    TrueSimilarityOracle oracle(labels);
    auto pp = exact_proposals(oracle);
    // 1/(1+d): 1/3 x3, 1/2 x2, 1 -> total 3
    CHECK(pp.vertex_prob(0) == doctest::Approx(1.0 / 9.0));
    CHECK(pp.vertex_prob(3) == doctest::Approx(1.0 / 6.0));
    CHECK(pp.vertex_prob(5) == doctest::Approx(1.0 / 3.0));
    CHECK(pp.neighbor_prob(0, 1) == doctest::Approx(0.5));
    CHECK(pp.neighbor_prob(0, 3) == 0.0);
    CHECK(pp.neighbor_prob(5, 0) == doctest::Approx(0.2));
}
