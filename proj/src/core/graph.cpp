#include "ccest/graph.hpp"

#include "ccest/errors.hpp"

#include <numeric>
#include <string_view>
#include <unordered_map>

namespace ccest {

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0), components_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    --components_;
    return true;
}

std::vector<int> UnionFind::component_labels() {
    std::vector<int> out(parent_.size());
    std::vector<int> id_of_root(parent_.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) {
        const std::size_t r = find(i);
        if (id_of_root[r] < 0) id_of_root[r] = next++;
        out[i] = id_of_root[r];
    }
    return out;
}

std::vector<int> encode_labels(std::span<const std::string> labels) {
    std::unordered_map<std::string_view, int> ids;
    ids.reserve(labels.size());
    std::vector<int> codes;
    codes.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, inserted] = ids.try_emplace(l, static_cast<int>(ids.size()));
        codes.push_back(it->second);
    }
    return codes;
}

std::size_t exact_cc_unionfind(std::span<const int> labels) {
    if (labels.empty()) throw ValidationError("exact_cc_unionfind: empty label list");
    UnionFind uf(labels.size());
    std::unordered_map<int, std::size_t> first;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = first.try_emplace(labels[i], i);
        if (!inserted) uf.unite(it->second, i);
    }
    return uf.components();
}

std::size_t exact_cc_unionfind(std::span<const std::string> labels) {
    if (labels.empty()) throw ValidationError("exact_cc_unionfind: empty label list");
    const auto codes = encode_labels(labels);
    return exact_cc_unionfind(std::span<const int>(codes));
}

DegreeProfile DegreeProfile::from_labels(std::span<const int> codes) {
    std::unordered_map<int, std::size_t> sizes;
    for (int c : codes) ++sizes[c];
    DegreeProfile p;
    p.degrees.reserve(codes.size());
    for (int c : codes) p.degrees.push_back(static_cast<double>(sizes[c] - 1));
    return p;
}

DegreeProfile DegreeProfile::from_labels(std::span<const std::string> labels) {
    const auto codes = encode_labels(labels);
    return from_labels(std::span<const int>(codes));
}

double exact_cc_degree_identity(const DegreeProfile& profile) {
    double k = 0.0;
    for (double d : profile.degrees) k += 1.0 / (1.0 + d);
    return k;
}

TrueSimilarityOracle::TrueSimilarityOracle(std::span<const std::string> labels)
    : TrueSimilarityOracle(encode_labels(labels)) {}

TrueSimilarityOracle::TrueSimilarityOracle(std::vector<int> codes) : codes_(std::move(codes)), cluster_count_(0) {
    if (codes_.empty()) throw ValidationError("oracle needs at least one label");
    cluster_count_ = exact_cc_unionfind(std::span<const int>(codes_));
}

int TrueSimilarityOracle::answer(std::size_t u, std::size_t v) const {
    if (u == v) throw ValidationError("self-pairs are never queried (u == v == " + std::to_string(u) + ")");
    if (u >= codes_.size() || v >= codes_.size()) throw ValidationError("pair index out of range");
    return codes_[u] == codes_[v] ? 1 : 0;
}

}  // namespace ccest
