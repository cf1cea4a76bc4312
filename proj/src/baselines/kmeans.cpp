#include "ccest/baselines/kmeans.hpp"

#include "ccest/errors.hpp"
#include "ccest/kernels.hpp"
#include "lloyd.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace ccest {

namespace detail {

double distortion(const MatrixF& x, const std::vector<int>& assignment, const MatrixF& centers) {
    const auto& kt = kernels::active();
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        total += kt.sq_dist(x.row(i).data(), centers.row(assignment[i]).data(), x.cols());
    return total;
}

namespace {

void update_centers(const MatrixF& x, const std::vector<int>& assignment, MatrixF& centers) {
    const std::size_t k = centers.rows(), d = x.cols();
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    const auto& kt = kernels::active();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto c = static_cast<std::size_t>(assignment[i]);
        kt.accumulate(sums.data() + c * d, x.row(i).data(), d);
        ++counts[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;  // empty cluster keeps its center
        auto row = centers.row(c);
        for (std::size_t j = 0; j < d; ++j)
            row[j] = static_cast<float>(sums[c * d + j] / static_cast<double>(counts[c]));
    }
}

}  // namespace

LloydOutput lloyd(const MatrixF& x, MatrixF centers, const Adjacency* adj, double alpha, double beta,
                  Rng* order_rng, std::size_t max_iterations) {
    const std::size_t n = x.rows(), k = centers.rows(), d = x.cols();
    const auto& kt = kernels::active();
    LloydOutput out;
    out.assignment.assign(n, -1);
    std::vector<std::size_t> order(n);
    std::vector<double> dist(k), penalty(k);

    for (std::size_t iter = 0; iter < std::max<std::size_t>(1, max_iterations); ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (adj && order_rng) order_rng->shuffle(order.begin(), order.end());
        bool changed = false;
        for (std::size_t i : order) {
            kt.sq_dist_rows(x.row(i).data(), centers.data().data(), k, d, dist.data());
            if (adj) {
                std::fill(penalty.begin(), penalty.end(), 0.0);
                for (auto [j, must] : (*adj)[i]) {
                    int lj = out.assignment[j];
                    if (lj < 0) continue;
                    if (must) {
                        for (std::size_t c = 0; c < k; ++c)
                            if (static_cast<int>(c) != lj) penalty[c] += alpha;
                    } else {
                        penalty[lj] += beta;
                    }
                }
                for (std::size_t c = 0; c < k; ++c) dist[c] += penalty[c];
            }
            // Keep the current label unless another is strictly better.
            int cur = out.assignment[i];
            int best = cur >= 0 ? cur : 0;
            for (std::size_t c = 0; c < k; ++c)
                if (dist[c] < dist[best]) best = static_cast<int>(c);
            if (best != cur) {
                out.assignment[i] = best;
                changed = true;
            }
        }
        update_centers(x, out.assignment, centers);
        double j = distortion(x, out.assignment, centers);
        if (adj) {
            for (std::size_t i = 0; i < n; ++i)
                for (auto [p, must] : (*adj)[i]) {
                    if (p < i) continue;
                    bool same = out.assignment[i] == out.assignment[p];
                    if (must && !same) j += alpha;
                    if (!must && same) j += beta;
                }
        }
        out.trace.push_back(j);
        out.iterations = iter + 1;
        if (!changed) break;
    }
    out.centers = std::move(centers);
    return out;
}

}  // namespace detail

MatrixF kmeanspp_init(const MatrixF& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows(), d = x.cols();
    const auto& kt = kernels::active();
    MatrixF centers(k, d);
    auto put = [&](std::size_t c, std::size_t i) { std::copy_n(x.row(i).data(), d, centers.row(c).data()); };
    put(0, rng.uniform_index(n));
    std::vector<double> d2(n), tmp(n);
    kt.sq_dist_rows(centers.row(0).data(), x.data().data(), n, d, d2.data());
    for (std::size_t c = 1; c < k; ++c) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform01() * total, cum = 0.0;
            pick = n;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > r && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n)  // rounding at the tail
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
        } else {
            pick = rng.uniform_index(n);
        }
        put(c, pick);
        kt.sq_dist_rows(centers.row(c).data(), x.data().data(), n, d, tmp.data());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], tmp[i]);
    }
    return centers;
}

KMeansResult kmeans(const MatrixF& x, std::size_t k, std::uint64_t seed, std::size_t restarts,
                    std::size_t max_iterations) {
    if (k < 1 || k > x.rows())
        throw ValidationError("kmeans: k=" + std::to_string(k) + " must be in [1, " + std::to_string(x.rows()) + "]");
    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
        Rng rng(seed, Stream::KMeans, r);
        auto out = detail::lloyd(x, kmeanspp_init(x, k, rng), nullptr, 0.0, 0.0, nullptr, max_iterations);
        double j = out.trace.back();
        if (j < best.wcss) {
            best.assignment = std::move(out.assignment);
            best.centers = std::move(out.centers);
            best.wcss = j;
            best.iterations = out.iterations;
            best.wcss_trace = std::move(out.trace);
        }
    }
    return best;
}

double wcss(const MatrixF& x, std::span<const int> assignment, const MatrixF& centers) {
    return detail::distortion(x, std::vector<int>(assignment.begin(), assignment.end()), centers);
}

KSweep kmeans_elbow(const MatrixF& x, std::span<const std::size_t> ks, std::uint64_t seed,
                    std::size_t restarts, double tolerance) {
    KSweep sweep;
    for (std::size_t k : ks) {
        sweep.curve.xs.push_back(static_cast<double>(k));
        sweep.curve.js.push_back(kmeans(x, k, seed, restarts).wcss);
    }
    sweep.k_hat = static_cast<std::size_t>(elbow_select(sweep.curve, tolerance));
    return sweep;
}

std::vector<std::size_t> k_range(std::size_t lo, std::size_t hi, std::size_t step, std::size_t n) {
    if (lo < 1 || hi < lo || step < 1)
        throw ValidationError("k range must satisfy 1 <= lo <= hi and step >= 1");
    std::vector<std::size_t> ks;
    for (std::size_t k = lo; k <= std::min(hi, n); k += step) ks.push_back(k);
    return ks;
}

}  // namespace ccest
