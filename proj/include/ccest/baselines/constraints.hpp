#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace ccest {

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Pairwise constraints for constrained k-means. Pairs are stored with
/// first < second, without duplicates.
class ConstraintSet {
public:
    double alpha = 1.0;  // must-link violation penalty
    double beta = 1.0;   // cannot-link violation penalty

    // Throws ValidationError on self-pairs or when the pair is already in
    // the opposite set. Re-adding an existing pair is a no-op.
    void add_must_link(std::size_t a, std::size_t b);
    void add_cannot_link(std::size_t a, std::size_t b);

    const std::vector<IndexPair>& must_link() const noexcept { return must_; }
    const std::vector<IndexPair>& cannot_link() const noexcept { return cannot_; }
    bool empty() const noexcept { return must_.empty() && cannot_.empty(); }

    // Indices in range and negative penalties rejected.
    void validate(std::size_t n) const;

    // Per-point adjacency: partners[i] lists (j, is_must_link).
    std::vector<std::vector<std::pair<std::size_t, bool>>> adjacency(std::size_t n) const;

private:
    std::vector<IndexPair> must_;
    std::vector<IndexPair> cannot_;
    std::map<IndexPair, bool> kind_;  // true = must-link
};

}  // namespace ccest
