#pragma once

#include "ccest/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccest {

/// A collection of items to be counted. Embeddings and labels are optional:
/// a dataset may come with a precomputed similarity instead, and labels are
/// only known for simulation and evaluation.
struct Dataset {
    std::vector<std::string> item_ids;
    std::optional<MatrixF> embeddings;
    std::optional<std::vector<std::string>> labels;
    std::optional<std::vector<std::string>> image_refs;

    std::size_t size() const noexcept { return item_ids.size(); }
    std::size_t dim() const noexcept { return embeddings ? embeddings->cols() : 0; }

    // Throws ValidationError / ConsistencyError on any broken invariant.
    void validate() const;
};

std::string default_item_id(std::size_t index);
std::vector<std::string> default_item_ids(std::size_t n);

// Builds and validates a dataset. Item ids default to item_00000, ...
Dataset make_dataset(std::optional<MatrixF> embeddings, std::optional<std::vector<std::string>> labels = {},
                     std::size_t n_if_no_embeddings = 0);

inline constexpr std::string_view kEmbeddingMagic{"CCEMB1\0\0", 8};
inline constexpr std::string_view kSimilarityMagic{"CCSIM1\0\0", 8};

// Shared binary layout: 8 magic bytes, u64 rows, u64 cols, rows*cols f32, all little-endian.
MatrixF read_float_matrix(const std::filesystem::path& path, std::string_view magic);
void write_float_matrix(const std::filesystem::path& path, std::string_view magic, const MatrixF& m);

MatrixF read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const MatrixF& m);

std::vector<std::string> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<std::string>& labels);

struct ManifestEntry {
    std::string item_id;
    std::string image_uri;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

Dataset load_dataset(const std::filesystem::path& embeddings_path,
                     const std::optional<std::filesystem::path>& labels_path = {},
                     const std::optional<std::filesystem::path>& manifest_path = {});

}  // namespace ccest
