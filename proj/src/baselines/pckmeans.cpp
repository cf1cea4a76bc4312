#include "ccest/baselines/pckmeans.hpp"

#include "ccest/errors.hpp"
#include "lloyd.hpp"

#include <string>

namespace ccest {

double pckmeans_objective(const MatrixF& x, std::span<const int> assignment, const MatrixF& centers,
                          const ConstraintSet& constraints) {
    double j = wcss(x, assignment, centers);
    for (auto [a, b] : constraints.must_link())
        if (assignment[a] != assignment[b]) j += constraints.alpha;
    for (auto [a, b] : constraints.cannot_link())
        if (assignment[a] == assignment[b]) j += constraints.beta;
    return j;
}

PcKMeansResult pckmeans(const MatrixF& x, std::size_t k, const ConstraintSet& constraints,
                        std::uint64_t seed, std::size_t max_iterations) {
    if (k < 1 || k > x.rows())
        throw ValidationError("pckmeans: k=" + std::to_string(k) + " must be in [1, " + std::to_string(x.rows()) + "]");
    auto adj = constraints.adjacency(x.rows());
    Rng init_rng(seed, Stream::KMeans, 0);
    Rng order_rng(seed, Stream::PcKMeansOrder, 0);
    auto out = detail::lloyd(x, kmeanspp_init(x, k, init_rng), &adj, constraints.alpha, constraints.beta,
                             &order_rng, max_iterations);

    PcKMeansResult r;
    r.distortion = detail::distortion(x, out.assignment, out.centers);
    for (auto [a, b] : constraints.must_link())
        if (out.assignment[a] != out.assignment[b]) ++r.must_link_violations;
    for (auto [a, b] : constraints.cannot_link())
        if (out.assignment[a] == out.assignment[b]) ++r.cannot_link_violations;
    r.objective = r.distortion + constraints.alpha * static_cast<double>(r.must_link_violations) +
                  constraints.beta * static_cast<double>(r.cannot_link_violations);
    r.assignment = std::move(out.assignment);
    r.centers = std::move(out.centers);
    r.iterations = out.iterations;
    r.objective_trace = std::move(out.trace);
    return r;
}

KSweep pckmeans_elbow(const MatrixF& x, std::span<const std::size_t> ks,
                      const ConstraintSet& constraints, std::uint64_t seed, double tolerance) {
    KSweep sweep;
    for (std::size_t k : ks) {
        sweep.curve.xs.push_back(static_cast<double>(k));
        sweep.curve.js.push_back(pckmeans(x, k, constraints, seed).objective);
    }
    sweep.k_hat = static_cast<std::size_t>(elbow_select(sweep.curve, tolerance));
    return sweep;
}

}  // namespace ccest
