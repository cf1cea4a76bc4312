#include "ccest/alias_table.hpp"

#include "ccest/errors.hpp"

#include <cmath>

namespace ccest {

AliasTable::AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw ValidationError("alias table needs at least one weight");
    double total = 0.0;
    std::size_t heaviest = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
            throw ValidationError("alias table weights must be finite and non-negative");
        total += weights[i];
        if (weights[i] > weights[heaviest]) heaviest = i;
    }
    if (!(total > 0.0)) throw ValidationError("alias table weights sum to zero");

    probability_.resize(n);
    threshold_.assign(n, 0.0);
    alias_.assign(n, static_cast<std::uint32_t>(heaviest));

    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small;
    std::vector<std::uint32_t> large;
    for (std::size_t i = 0; i < n; ++i) {
        probability_[i] = weights[i] / total;
        scaled[i] = probability_[i] * static_cast<double>(n);
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        const auto s = small.back();
        small.pop_back();
        const auto l = large.back();
        threshold_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (auto l : large) threshold_[l] = 1.0;
    // Leftover small entries are rounding residue; keep zero weights unreachable.
    for (auto s : small) threshold_[s] = weights[s] > 0.0 ? 1.0 : 0.0;
}

}  // namespace ccest
