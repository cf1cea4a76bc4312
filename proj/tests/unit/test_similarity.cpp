#include "ccest/dataset.hpp"
#include "ccest/errors.hpp"
#include "ccest/kernels.hpp"
#include "ccest/similarity.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>

using namespace ccest;

namespace {

MatrixF random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    MatrixF m(n, d);
    Rng rng(seed);
    for (auto& x : m.data()) x = static_cast<float>(rng.normal());
    return m;
}

MatrixF constant_cosine(std::size_t n, float c) {
    MatrixF m(n, n, c);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
}

MatrixF random_cosine(std::size_t n, std::uint64_t seed) {
    return cosine_matrix(random_matrix(n, 6, seed));
}

}  // namespace

TEST_CASE("cosine of simple rows") {
    MatrixF e(2, 2, std::vector<float>{1, 0, 0, 1});
    CHECK(cosine_matrix(e)(0, 1) == doctest::Approx(0.0));
    MatrixF f(2, 2, std::vector<float>{2, 0, 1, 0});
    CHECK(cosine_matrix(f)(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("cosine matrix matches a double loop") {
    auto e = random_matrix(50, 8, 21);
    auto c = cosine_matrix(e);
    for (std::size_t u = 0; u < 50; ++u)
        for (std::size_t v = 0; v < 50; ++v) {
            double dot = 0, nu = 0, nv = 0;
            for (std::size_t d = 0; d < 8; ++d) {
                dot += static_cast<double>(e(u, d)) * e(v, d);
                nu += static_cast<double>(e(u, d)) * e(u, d);
                nv += static_cast<double>(e(v, d)) * e(v, d);
            }
            CHECK(std::abs(c(u, v) - dot / std::sqrt(nu * nv)) < 1e-6);
            CHECK(c(u, v) == c(v, u));
        }
}

TEST_CASE("cosine matrix agrees across kernel ISAs") {
    auto e = random_matrix(40, 67, 22);
    const auto before = kernels::active().isa;
    kernels::select(kernels::Isa::Scalar);
    auto ref = cosine_matrix(e);
    for (auto isa : kernels::available()) {
        kernels::select(isa);
        auto c = cosine_matrix(e);
        for (std::size_t i = 0; i < c.data().size(); ++i) CHECK(std::abs(c.data()[i] - ref.data()[i]) < 1e-6);
    }
    kernels::select(before);
}

TEST_CASE("zero-norm row is named in the error") {
    MatrixF e(3, 2, std::vector<float>{1, 0, 0, 0, 0, 1});
    try {
        cosine_matrix(e);
        FAIL("expected an error");
    } catch (const ValidationError& err) {
        CHECK(std::string(err.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("row softmax small cases") {
    auto s3 = row_softmax(constant_cosine(3, 0.3f), 0.5);
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) CHECK(s3(u, v) == doctest::Approx(u == v ? 0.0 : 0.5));
    auto s2 = row_softmax(constant_cosine(2, -0.7f), 0.5);
    CHECK(s2(0, 1) == 1.0);
    CHECK(s2(1, 0) == 1.0);
    CHECK_THROWS_AS(row_softmax(constant_cosine(3, 0.f), 0.0), ValidationError);
    CHECK_THROWS_AS(row_softmax(constant_cosine(3, 0.f), -1.0), ValidationError);
}

TEST_CASE("row softmax matches a naive exp/sum loop") {
    auto c = random_cosine(20, 23);
    auto s = row_softmax(c, 0.5);
    for (std::size_t u = 0; u < 20; ++u) {
        double z = 0, total = 0;
        for (std::size_t w = 0; w < 20; ++w)
            if (w != u) z += std::exp(c(u, w) / 0.5);
        for (std::size_t v = 0; v < 20; ++v) {
            total += s(u, v);
            if (v == u) {
                CHECK(s(u, v) == 0.0);
                continue;
            }
            CHECK(s(u, v) > 0.0);
            CHECK(std::abs(s(u, v) - std::exp(c(u, v) / 0.5) / z) < 1e-9);
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("row softmax is monotone in cosine and uniform at huge tau") {
    auto c = random_cosine(30, 24);
    auto s = row_softmax(c, 0.2);
    for (std::size_t u = 0; u < 30; ++u)
        for (std::size_t a = 0; a < 30; ++a)
            for (std::size_t b = 0; b < 30; ++b)
                if (a != u && b != u && c(u, a) > c(u, b)) CHECK(s(u, a) > s(u, b));
    auto flat = row_softmax(c, 1e6);
    double worst = 0.0;
    for (std::size_t u = 0; u < 30; ++u)
        for (std::size_t v = 0; v < 30; ++v)
            if (u != v) worst = std::max(worst, std::abs(flat(u, v) - 1.0 / 29.0));
    CHECK(worst < 1e-4);
}

TEST_CASE("streamed rows equal the materialized matrix") {
    auto model = SimilarityModel::from_cosine(random_cosine(25, 25), 0.3);
    auto full = model.row_softmax();
    std::vector<double> row(25);
    for (std::size_t u = 0; u < 25; ++u) {
        model.softmax_row(u, row);
        for (std::size_t v = 0; v < 25; ++v) CHECK(row[v] == full(u, v));
    }
}

TEST_CASE("soft degree under each calibration") {
    auto d = soft_degree(constant_cosine(6, 0.4f), 0.5, Calibration::GlobalMaxExp);
    for (double x : d) CHECK(x == doctest::Approx(5.0));

    auto d2 = soft_degree(constant_cosine(2, 0.1f), 0.5, Calibration::GlobalMaxExp);
    CHECK(d2[0] == d2[1]);
    CHECK(d2[0] > 0.0);
    CHECK(d2[0] <= 1.0);

    // Three tight points and one orthogonal outlier.
    MatrixF e(4, 3, std::vector<float>{1, 0.05f, 0, 1, -0.05f, 0, 1, 0, 0.05f, 0, 0, 1});
    auto c = cosine_matrix(e);
    for (auto cal : {Calibration::GlobalMaxExp, Calibration::AffineClip, Calibration::FixedSigmoid}) {
        auto sd = soft_degree(c, 0.5, cal);
        CAPTURE(to_string(cal));
        for (std::size_t u = 0; u < 3; ++u) CHECK(sd[3] < sd[u]);
        for (double x : sd) CHECK(x > 0.0);
    }
    CHECK_THROWS_AS(calibration_from_string("softplus"), ConfigError);
    CHECK(calibration_from_string("affine-clip") == Calibration::AffineClip);
}

TEST_CASE("similarity file round-trip and validation") {
    fixtures::TempDir dir;
    auto model = SimilarityModel::from_embeddings(random_matrix(12, 5, 26), 0.5);
    save_similarity(dir / "s.bin", model);
    auto loaded = load_similarity(dir / "s.bin", 0.5);
    CHECK(loaded.cosine() == model.cosine());

    MatrixF bad = constant_cosine(3, 0.2f);
    bad(0, 1) = 0.3f;
    write_float_matrix(dir / "bad.bin", kSimilarityMagic, bad);
    CHECK_THROWS_AS(load_similarity(dir / "bad.bin"), ValidationError);

    write_embeddings(dir / "emb.bin", random_matrix(3, 3, 27));
    CHECK_THROWS_AS(load_similarity(dir / "emb.bin"), FormatError);
}

TEST_CASE("large similarity matrix loads and reports its footprint") {
    fixtures::TempDir dir;
    const std::size_t n = 7693;
    MatrixF c(n, n, 0.1f);
    for (std::size_t i = 0; i < n; ++i) c(i, i) = 1.0f;
    write_float_matrix(dir / "big.bin", kSimilarityMagic, c);
    auto model = load_similarity(dir / "big.bin", 0.5);
    CHECK(model.size() == n);
    CHECK(model.memory_bytes() >= n * n * sizeof(float));
    MESSAGE("n=7693 similarity model holds " << model.memory_bytes() / (1024 * 1024) << " MiB");
}
