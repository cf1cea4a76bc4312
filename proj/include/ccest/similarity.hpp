#pragma once

#include "ccest/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace ccest {

inline constexpr double kDefaultTau = 0.5;

/// Monotone map g from cosine to [0, 1] used to build the soft degree
/// D~(u) = sum_{v != u} g(c(u, v)).
enum class Calibration {
    GlobalMaxExp,  // exp((c - c_max) / tau): the most similar pair scores 1
    AffineClip,    // (c - c_min) / (c_max - c_min), floored at 1e-6
    FixedSigmoid,  // 1 / (1 + exp(-(c - 0.5) / 0.1))
};

Calibration calibration_from_string(std::string_view name);
std::string_view to_string(Calibration c);

// Cosine of every pair of embedding rows. Exactly symmetric; diagonal is 1.
// Throws ValidationError naming the first zero-norm row.
MatrixF cosine_matrix(const MatrixF& embeddings);

// Row-normalized temperature softmax over v != u; diagonal is 0.
MatrixD row_softmax(const MatrixF& cosine, double tau);
void softmax_row(const MatrixF& cosine, double tau, std::size_t u, std::span<double> out);

std::vector<double> soft_degree(const MatrixF& cosine, double tau, Calibration calibration);

/// Approximate pairwise similarity. Holds the cosine matrix; the row
/// softmax is streamed per row on demand rather than materialized.
class SimilarityModel {
public:
    static SimilarityModel from_embeddings(const MatrixF& embeddings, double tau = kDefaultTau,
                                           Calibration calibration = Calibration::GlobalMaxExp);
    // Validates symmetry (1e-4), range and finiteness; diagonal is ignored.
    static SimilarityModel from_cosine(MatrixF cosine, double tau = kDefaultTau,
                                       Calibration calibration = Calibration::GlobalMaxExp);

    std::size_t size() const noexcept { return cosine_.rows(); }
    double tau() const noexcept { return tau_; }
    Calibration calibration() const noexcept { return calibration_; }

    const MatrixF& cosine() const noexcept { return cosine_; }
    double cosine(std::size_t u, std::size_t v) const { return cosine_(u, v); }

    void softmax_row(std::size_t u, std::span<double> out) const;
    MatrixD row_softmax() const;

    std::span<const double> soft_degree() const noexcept { return soft_degree_; }

    double min_offdiag() const noexcept { return min_offdiag_; }
    double max_offdiag() const noexcept { return max_offdiag_; }

    std::size_t memory_bytes() const noexcept;

private:
    SimilarityModel(MatrixF cosine, double tau, Calibration calibration);

    MatrixF cosine_;
    double tau_;
    Calibration calibration_;
    std::vector<double> soft_degree_;
    double min_offdiag_ = 0.0;
    double max_offdiag_ = 0.0;
};

SimilarityModel load_similarity(const std::filesystem::path& path, double tau = kDefaultTau,
                                Calibration calibration = Calibration::GlobalMaxExp);
void save_similarity(const std::filesystem::path& path, const SimilarityModel& model);

}  // namespace ccest
