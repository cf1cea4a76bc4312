#pragma once

#include "ccest/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ccest {

/// Vose alias table: O(n) build, O(1) draw. Zero-weight entries are never drawn.
class AliasTable {
public:
    AliasTable() = default;
    // weights must be non-negative and finite with a positive sum.
    explicit AliasTable(std::span<const double> weights);

    std::size_t size() const noexcept { return probability_.size(); }
    double probability(std::size_t i) const { return probability_[i]; }
    std::span<const double> probabilities() const noexcept { return probability_; }

    std::size_t sample(Rng& rng) const {
        const std::size_t i = rng.uniform_index(threshold_.size());
        return rng.uniform01() < threshold_[i] ? i : alias_[i];
    }

private:
    std::vector<double> probability_;
    std::vector<double> threshold_;
    std::vector<std::uint32_t> alias_;
};

}  // namespace ccest
