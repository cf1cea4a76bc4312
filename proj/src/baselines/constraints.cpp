#include "ccest/baselines/constraints.hpp"

#include "ccest/errors.hpp"

#include <string>

namespace ccest {

namespace {
IndexPair ordered(std::size_t a, std::size_t b) {
    if (a == b) throw ValidationError("constraint on self-pair " + std::to_string(a));
    return a < b ? IndexPair{a, b} : IndexPair{b, a};
}
}  // namespace

void ConstraintSet::add_must_link(std::size_t a, std::size_t b) {
    auto p = ordered(a, b);
    auto [it, fresh] = kind_.emplace(p, true);
    if (!it->second)
        throw ValidationError("pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                              ") is already cannot-link");
    if (fresh) must_.push_back(p);
}

void ConstraintSet::add_cannot_link(std::size_t a, std::size_t b) {
    auto p = ordered(a, b);
    auto [it, fresh] = kind_.emplace(p, false);
    if (it->second)
        throw ValidationError("pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                              ") is already must-link");
    if (fresh) cannot_.push_back(p);
}

void ConstraintSet::validate(std::size_t n) const {
    if (alpha < 0.0 || beta < 0.0) throw ValidationError("constraint penalties must be non-negative");
    for (const auto* set : {&must_, &cannot_})
        for (auto [a, b] : *set)
            if (a >= n || b >= n)
                throw ValidationError("constraint index out of range for n=" + std::to_string(n));
}

std::vector<std::vector<std::pair<std::size_t, bool>>> ConstraintSet::adjacency(std::size_t n) const {
    validate(n);
    std::vector<std::vector<std::pair<std::size_t, bool>>> adj(n);
    for (auto [a, b] : must_) {
        adj[a].push_back({b, true});
        adj[b].push_back({a, true});
    }
    for (auto [a, b] : cannot_) {
        adj[a].push_back({b, false});
        adj[b].push_back({a, false});
    }
    return adj;
}

}  // namespace ccest
