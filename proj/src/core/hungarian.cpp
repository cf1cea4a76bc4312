#include "ccest/hungarian.hpp"

#include "ccest/errors.hpp"

#include <limits>

namespace ccest {

// Shortest augmenting path with potentials, O(rows^2 cols).
std::vector<int> hungarian_min_cost(const MatrixD& cost) {
    const std::size_t n = cost.rows();
    const std::size_t m = cost.cols();
    if (n == 0) return {};
    if (n > m) throw ValidationError("hungarian: more rows than columns");
    constexpr double inf = std::numeric_limits<double>::infinity();

    // 1-based internals; column 0 is the virtual root.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = static_cast<int>(j - 1);
    return assignment;
}

}  // namespace ccest
