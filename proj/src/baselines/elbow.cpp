#include "ccest/baselines/elbow.hpp"

#include "ccest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccest {

std::size_t elbow_index(std::span<const double> xs, std::span<const double> js, double tolerance) {
    if (xs.size() != js.size())
        throw ValidationError("elbow: xs and js differ in length");
    if (xs.size() < 4)
        throw ValidationError("elbow: need at least 4 points, got " + std::to_string(xs.size()));
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ValidationError("elbow: xs must be strictly increasing");
    if (!(tolerance > 0.0)) throw ValidationError("elbow: tolerance must be positive");

    auto [lo, hi] = std::minmax_element(js.begin(), js.end());
    double range = *hi - *lo;
    if (!(range > 0.0)) return 0;

    const double mean_step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    auto slope = [&](std::size_t t) {
        return std::abs(js[t] - js[t - 1]) / range * (mean_step / (xs[t] - xs[t - 1]));
    };
    // Walk back from the end while slopes stay under the tolerance.
    std::size_t idx = js.size() - 1;
    while (idx > 0 && slope(idx) < tolerance) --idx;
    return idx == js.size() - 1 ? 0 : idx;
}

double elbow_select(ElbowCurve& curve, double tolerance) {
    curve.elbow_index = elbow_index(curve.xs, curve.js, tolerance);
    return curve.xs[curve.elbow_index];
}

}  // namespace ccest
