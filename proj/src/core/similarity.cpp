#include "ccest/similarity.hpp"

#include "ccest/dataset.hpp"
#include "ccest/errors.hpp"
#include "ccest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ccest {
namespace {

void require_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("temperature tau must be positive and finite");
}

std::pair<double, double> offdiag_range(const MatrixF& c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const std::size_t n = c.rows();
    for (std::size_t u = 0; u < n; ++u) {
        const auto row = c.row(u);
        for (std::size_t v = 0; v < n; ++v) {
            if (v == u) continue;
            lo = std::min(lo, static_cast<double>(row[v]));
            hi = std::max(hi, static_cast<double>(row[v]));
        }
    }
    return {lo, hi};
}

}  // namespace

Calibration calibration_from_string(std::string_view name) {
    if (name == "global-max-exp") return Calibration::GlobalMaxExp;
    if (name == "affine-clip") return Calibration::AffineClip;
    if (name == "fixed-sigmoid") return Calibration::FixedSigmoid;
    throw ConfigError("unknown calibration '" + std::string(name) +
                      "' (expected global-max-exp, affine-clip or fixed-sigmoid)");
}

std::string_view to_string(Calibration c) {
    switch (c) {
        case Calibration::GlobalMaxExp: return "global-max-exp";
        case Calibration::AffineClip: return "affine-clip";
        case Calibration::FixedSigmoid: return "fixed-sigmoid";
    }
    return "unknown";
}

MatrixF cosine_matrix(const MatrixF& embeddings) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    if (n == 0 || d == 0) throw ValidationError("cosine_matrix: empty embeddings");
    const auto& k = kernels::active();

    std::vector<double> norms(n);
    for (std::size_t u = 0; u < n; ++u) {
        const auto row = embeddings.row(u);
        norms[u] = std::sqrt(k.dot(row.data(), row.data(), d));
        if (!(norms[u] > 0.0)) throw ValidationError("embedding row " + std::to_string(u) + " has zero norm");
    }

    MatrixF out(n, n);
    std::vector<double> dots(n);
#pragma omp parallel for schedule(dynamic, 16) firstprivate(dots)
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t count = n - u - 1;
        if (count > 0) k.dot_rows(embeddings.row(u).data(), embeddings.row(u + 1).data(), count, d, dots.data());
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t v = u + 1 + j;
            const double c = std::clamp(dots[j] / (norms[u] * norms[v]), -1.0, 1.0);
            out(u, v) = static_cast<float>(c);
        }
        out(u, u) = 1.0f;
    }
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) out(v, u) = out(u, v);
    return out;
}

void softmax_row(const MatrixF& cosine, double tau, std::size_t u, std::span<double> out) {
    require_tau(tau);
    const std::size_t n = cosine.rows();
    if (out.size() != n) throw ValidationError("softmax_row: output span has wrong length");
    if (n < 2) throw ValidationError("softmax_row: need at least two items");
    const auto row = cosine.row(u);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < n; ++v)
        if (v != u) mx = std::max(mx, static_cast<double>(row[v]) / tau);
    double sum = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        if (v == u) {
            out[v] = 0.0;
            continue;
        }
        out[v] = std::exp(static_cast<double>(row[v]) / tau - mx);
        sum += out[v];
    }
    for (std::size_t v = 0; v < n; ++v) out[v] /= sum;
}

MatrixD row_softmax(const MatrixF& cosine, double tau) {
    require_tau(tau);
    const std::size_t n = cosine.rows();
    MatrixD out(n, n);
    for (std::size_t u = 0; u < n; ++u) softmax_row(cosine, tau, u, out.row(u));
    return out;
}

std::vector<double> soft_degree(const MatrixF& cosine, double tau, Calibration calibration) {
    require_tau(tau);
    const std::size_t n = cosine.rows();
    if (n < 2) throw ValidationError("soft_degree: need at least two items");
    const auto [lo, hi] = offdiag_range(cosine);

    auto g = [&, lo = lo, hi = hi](double c) -> double {
        switch (calibration) {
            case Calibration::GlobalMaxExp: return std::exp((c - hi) / tau);
            case Calibration::AffineClip:
                if (hi - lo <= 0.0) return 1.0;
                return std::clamp((c - lo) / (hi - lo), 1e-6, 1.0);
            case Calibration::FixedSigmoid: return 1.0 / (1.0 + std::exp(-(c - 0.5) / 0.1));
        }
        return 1.0;
    };

    std::vector<double> out(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        const auto row = cosine.row(u);
        double s = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            if (v != u) s += g(row[v]);
        out[u] = s;
    }
    return out;
}

SimilarityModel::SimilarityModel(MatrixF cosine, double tau, Calibration calibration)
    : cosine_(std::move(cosine)), tau_(tau), calibration_(calibration) {
    require_tau(tau_);
    if (cosine_.rows() < 2) throw ValidationError("similarity model needs at least two items");
    std::tie(min_offdiag_, max_offdiag_) = offdiag_range(cosine_);
    soft_degree_ = ccest::soft_degree(cosine_, tau_, calibration_);
}

SimilarityModel SimilarityModel::from_embeddings(const MatrixF& embeddings, double tau, Calibration calibration) {
    require_tau(tau);
    return SimilarityModel(cosine_matrix(embeddings), tau, calibration);
}

SimilarityModel SimilarityModel::from_cosine(MatrixF cosine, double tau, Calibration calibration) {
    require_tau(tau);
    const std::size_t n = cosine.rows();
    if (n != cosine.cols()) throw ValidationError("similarity matrix must be square");
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const double a = cosine(u, v);
            const double b = cosine(v, u);
            if (!std::isfinite(a) || !std::isfinite(b))
                throw ValidationError("non-finite similarity at (" + std::to_string(u) + "," + std::to_string(v) + ")");
            if (std::abs(a - b) > 1e-4)
                throw ValidationError("similarity matrix is asymmetric at (" + std::to_string(u) + "," +
                                      std::to_string(v) + ")");
            if (std::abs(a) > 1.0 + 1e-6 || std::abs(b) > 1.0 + 1e-6)
                throw ValidationError("similarity value outside [-1, 1] at (" + std::to_string(u) + "," +
                                      std::to_string(v) + ")");
        }
    }
    return SimilarityModel(std::move(cosine), tau, calibration);
}

void SimilarityModel::softmax_row(std::size_t u, std::span<double> out) const {
    ccest::softmax_row(cosine_, tau_, u, out);
}

MatrixD SimilarityModel::row_softmax() const { return ccest::row_softmax(cosine_, tau_); }

std::size_t SimilarityModel::memory_bytes() const noexcept {
    return cosine_.memory_bytes() + soft_degree_.capacity() * sizeof(double) + sizeof(*this);
}

SimilarityModel load_similarity(const std::filesystem::path& path, double tau, Calibration calibration) {
    MatrixF m = read_float_matrix(path, kSimilarityMagic);
    if (m.rows() != m.cols()) throw FormatError(path.string() + ": similarity matrix is not square");
    return SimilarityModel::from_cosine(std::move(m), tau, calibration);
}

void save_similarity(const std::filesystem::path& path, const SimilarityModel& model) {
    write_float_matrix(path, kSimilarityMagic, model.cosine());
}

}  // namespace ccest
