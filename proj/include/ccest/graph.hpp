#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ccest {

class UnionFind {
public:
    explicit UnionFind(std::size_t n);

    std::size_t find(std::size_t x);
    // Returns true when two distinct sets were merged.
    bool unite(std::size_t a, std::size_t b);
    std::size_t components() const noexcept { return components_; }
    std::size_t size() const noexcept { return parent_.size(); }

    // Dense component ids 0..components()-1, in order of first appearance.
    std::vector<int> component_labels();

private:
    std::vector<std::size_t> parent_;
    std::vector<std::uint32_t> rank_;
    std::size_t components_;
};

// Maps opaque labels to dense integer codes in order of first appearance.
std::vector<int> encode_labels(std::span<const std::string> labels);

// Connected components of the clique graph induced by the labels.
std::size_t exact_cc_unionfind(std::span<const std::string> labels);
std::size_t exact_cc_unionfind(std::span<const int> labels);

/// Per-vertex degree in the same-cluster graph, self excluded. Degrees are
/// real-valued so the identity below can also be applied to estimates.
struct DegreeProfile {
    std::vector<double> degrees;

    static DegreeProfile from_labels(std::span<const int> codes);
    static DegreeProfile from_labels(std::span<const std::string> labels);
};

// K = sum_u 1 / (1 + d(u)).
double exact_cc_degree_identity(const DegreeProfile& profile);

/// Ground-truth pair answers derived from labels: 1 iff same cluster.
class TrueSimilarityOracle {
public:
    explicit TrueSimilarityOracle(std::span<const std::string> labels);
    explicit TrueSimilarityOracle(std::vector<int> codes);

    std::size_t size() const noexcept { return codes_.size(); }
    // Throws ValidationError for u == v or out-of-range indices.
    int answer(std::size_t u, std::size_t v) const;
    int cluster_of(std::size_t u) const { return codes_.at(u); }
    std::span<const int> codes() const noexcept { return codes_; }
    std::size_t cluster_count() const noexcept { return cluster_count_; }

private:
    std::vector<int> codes_;
    std::size_t cluster_count_;
};

}  // namespace ccest
