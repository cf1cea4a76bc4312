#include "ccest/baselines/meanshift.hpp"

#include "ccest/errors.hpp"
#include "ccest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ccest {

double mean_nn_distance(const MatrixF& x, std::size_t rank) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n < 2) throw ValidationError("nearest-neighbour distance needs at least 2 points");
    if (rank < 1 || rank > n - 1)
        throw ValidationError("neighbour rank must be in [1, " + std::to_string(n - 1) + "]");
    const auto& kt = kernels::active();
    double total = 0.0;
#pragma omp parallel for reduction(+ : total) schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> dist(n);
        kt.sq_dist_rows(x.row(i).data(), x.data().data(), n, d, dist.data());
        dist[i] = std::numeric_limits<double>::infinity();
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(rank - 1), dist.end());
        total += std::sqrt(dist[rank - 1]);
    }
    return total / static_cast<double>(n);
}

MeanShiftResult meanshift_count(const MatrixF& x, std::size_t bandwidth_rank, std::size_t max_iterations) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n < 2) throw ValidationError("mean shift needs at least 2 points");
    const auto& kt = kernels::active();
    MeanShiftResult r;
    const double h = mean_nn_distance(x, std::min(bandwidth_rank, n - 1));
    r.bandwidth = h;
    const double h2 = h * h;

    MatrixD converged(n, d);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> mode(x.row(i).begin(), x.row(i).end());
        std::vector<double> dist(n), acc(d);
        if (h > 0.0) {
            for (std::size_t it = 0; it < max_iterations; ++it) {
                kt.sq_dist_rows(mode.data(), x.data().data(), n, d, dist.data());
                std::fill(acc.begin(), acc.end(), 0.0);
                std::size_t count = 0;
                for (std::size_t j = 0; j < n; ++j)
                    if (dist[j] <= h2) {
                        kt.accumulate(acc.data(), x.row(j).data(), d);
                        ++count;
                    }
                if (count == 0) break;
                double shift2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    float next = static_cast<float>(acc[c] / static_cast<double>(count));
                    double delta = static_cast<double>(next) - mode[c];
                    shift2 += delta * delta;
                    mode[c] = next;
                }
                if (std::sqrt(shift2) < 1e-3 * h) break;
            }
        }
        for (std::size_t c = 0; c < d; ++c) converged(i, c) = mode[c];
    }

    // Greedy merge in index order.
    std::vector<std::size_t> reps;
    r.assignment.assign(n, -1);
    const double merge2 = (h / 2) * (h / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < reps.size(); ++m) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double delta = converged(i, c) - converged(reps[m], c);
                s += delta * delta;
            }
            if (s <= merge2) {
                r.assignment[i] = static_cast<int>(m);
                break;
            }
        }
        if (r.assignment[i] < 0) {
            r.assignment[i] = static_cast<int>(reps.size());
            reps.push_back(i);
        }
    }
    r.k_hat = reps.size();
    r.modes = MatrixD(reps.size(), d);
    for (std::size_t m = 0; m < reps.size(); ++m)
        for (std::size_t c = 0; c < d; ++c) r.modes(m, c) = converged(reps[m], c);
    return r;
}

}  // namespace ccest
