#pragma once

#include "ccest/baselines/constraints.hpp"
#include "ccest/matrix.hpp"
#include "ccest/rng.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

namespace fixtures {

// Isotropic Gaussian blobs around the given centers.
inline ccest::MatrixF blobs(const std::vector<std::vector<float>>& centers, std::size_t per_blob, double sigma,
                            std::uint64_t seed, std::vector<int>* labels = nullptr) {
    const std::size_t dim = centers.front().size();
    ccest::MatrixF x(centers.size() * per_blob, dim);
    ccest::Rng rng(seed);
    std::size_t r = 0;
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (std::size_t i = 0; i < per_blob; ++i, ++r) {
            for (std::size_t d = 0; d < dim; ++d) x(r, d) = centers[c][d] + static_cast<float>(sigma * rng.normal());
            if (labels) labels->push_back(static_cast<int>(c));
        }
    return x;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t k, ccest::Rng& rng) {
    std::vector<int> out(n);
    for (auto& l : out) l = static_cast<int>(rng.uniform_index(k));
    return out;
}

// Two 2-D blobs 2.5 sigma apart, plus 20 correct must-links: the 10
// members of each blob that reach furthest into the other blob, each tied
// to one of the 10 members furthest on the clean side of its own blob.
struct OverlapFixture {
    ccest::MatrixF x;
    std::vector<int> labels;
    ccest::ConstraintSet constraints;
};

inline OverlapFixture overlapping_blobs(std::uint64_t seed) {
    OverlapFixture f;
    f.x = blobs({{0.f, 0.f}, {0.75f, 0.f}}, 100, 0.3, seed, &f.labels);
    for (int b = 0; b < 2; ++b) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < f.labels.size(); ++i)
            if (f.labels[i] == b) idx.push_back(i);
        auto depth = [&](std::size_t i) { return b == 0 ? f.x(i, 0) : -f.x(i, 0); };
        std::sort(idx.begin(), idx.end(), [&](std::size_t p, std::size_t q) { return depth(p) > depth(q); });
        for (std::size_t j = 0; j < 10; ++j) f.constraints.add_must_link(idx[j], idx[idx.size() - 1 - j]);
    }
    return f;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("ccest_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
