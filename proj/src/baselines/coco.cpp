#include "ccest/baselines/coco.hpp"

#include "ccest/errors.hpp"
#include "ccest/graph.hpp"

#include <algorithm>
#include <string>

namespace ccest {

std::vector<int> threshold_components(const MatrixF& cosine, double threshold) {
    const std::size_t n = cosine.rows();
    UnionFind uf(n);
    for (std::size_t u = 0; u < n; ++u) {
        auto row = cosine.row(u);
        for (std::size_t v = u + 1; v < n; ++v)
            if (row[v] >= threshold) uf.unite(u, v);
    }
    return uf.component_labels();
}

double partition_wcss(const MatrixF& cosine, std::span<const int> labels) {
    const std::size_t n = cosine.rows();
    int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> inner(k, 0.0), size(k, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        size[labels[u]] += 1.0;
        auto row = cosine.row(u);
        double s = 1.0;  // self term
        for (std::size_t v = 0; v < n; ++v)
            if (v != u && labels[v] == labels[u]) s += row[v];
        inner[labels[u]] += s;
    }
    double total = 0.0;
    for (int c = 0; c < k; ++c)
        if (size[c] > 0.0) total += size[c] - inner[c] / size[c];
    return std::max(total, 0.0);
}

std::vector<double> default_thresholds(const SimilarityModel& model, std::size_t count) {
    if (count < 2) throw ValidationError("need at least 2 thresholds");
    double lo = model.min_offdiag(), hi = model.max_offdiag();
    std::vector<double> ts(count);
    for (std::size_t i = 0; i < count; ++i)
        ts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return ts;
}

CocoResult coco_estimate(const SimilarityModel& model, std::span<const double> thresholds,
                         std::span<const std::size_t> ks, double tolerance) {
    if (thresholds.empty()) throw ValidationError("coco: empty threshold list");
    CocoResult r;
    r.thresholds.assign(thresholds.begin(), thresholds.end());
    std::sort(r.thresholds.begin(), r.thresholds.end());
    for (double t : r.thresholds) {
        auto labels = threshold_components(model.cosine(), t);
        const int k = *std::max_element(labels.begin(), labels.end()) + 1;
        r.components.push_back(static_cast<std::size_t>(k));
        r.wcss.push_back(partition_wcss(model.cosine(), labels));
    }

    // One point per distinct count, at the lowest threshold reaching it.
    // Counts never decrease as the threshold rises.
    std::vector<std::size_t> first;
    for (std::size_t i = 0; i < r.components.size(); ++i)
        if (first.empty() || r.components[i] > r.components[first.back()]) first.push_back(i);

    std::vector<std::size_t> grid(ks.begin(), ks.end());
    if (grid.empty())
        for (std::size_t k = 1; k <= model.size(); ++k) grid.push_back(k);
    std::vector<std::size_t> chosen;
    for (std::size_t k : grid) {
        // WCSS is interpolated linearly in k between observed counts and
        // held flat outside them; the partition is the first reaching k.
        auto it = std::find_if(first.begin(), first.end(), [&](std::size_t i) { return r.components[i] >= k; });
        double j;
        std::size_t i;
        if (it == first.end()) {
            i = first.back();
            j = r.wcss[i];
        } else if (it == first.begin() || r.components[*it] == k) {
            i = *it;
            j = r.wcss[i];
        } else {
            i = *it;
            const std::size_t lo = *(it - 1);
            const double w = static_cast<double>(k - r.components[lo]) /
                             static_cast<double>(r.components[i] - r.components[lo]);
            j = (1.0 - w) * r.wcss[lo] + w * r.wcss[i];
        }
        r.curve.xs.push_back(static_cast<double>(k));
        r.curve.js.push_back(j);
        r.curve_thresholds.push_back(r.thresholds[i]);
        chosen.push_back(i);
    }
    elbow_select(r.curve, tolerance);
    const std::size_t i = chosen[r.curve.elbow_index];
    r.k_hat = r.components[i];
    r.threshold = r.thresholds[i];
    return r;
}

}  // namespace ccest
