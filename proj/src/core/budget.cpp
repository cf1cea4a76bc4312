#include "ccest/budget.hpp"

#include "ccest/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ccest {

BudgetPolicy budget_policy_from_string(std::string_view name) {
    if (name == "ratio") return BudgetPolicy::Ratio;
    if (name == "sqrt-alloc") return BudgetPolicy::SqrtAlloc;
    throw ConfigError("unknown budget policy '" + std::string(name) + "' (expected ratio or sqrt-alloc)");
}

std::string_view to_string(BudgetPolicy p) {
    return p == BudgetPolicy::Ratio ? "ratio" : "sqrt-alloc";
}

BudgetPlan plan_budget(std::size_t total_budget, BudgetPolicy policy, double parameter) {
    if (total_budget < 1) throw ValidationError("budget T must be at least 1");
    if (!(parameter > 0.0) || !std::isfinite(parameter))
        throw ValidationError("budget policy parameter must be positive");
    const double t = static_cast<double>(total_budget);
    BudgetPlan plan;
    plan.total_budget = total_budget;
    plan.policy = policy;
    plan.parameter = parameter;
    if (policy == BudgetPolicy::Ratio) {
        auto n = static_cast<std::size_t>(std::max(1.0, std::round(std::sqrt(t / parameter))));
        n = std::min(n, total_budget);
        auto m = static_cast<std::size_t>(std::max(1.0, std::round(parameter * static_cast<double>(n))));
        m = std::min(m, total_budget / n);
        plan.n = n;
        plan.m = std::max<std::size_t>(1, m);
    } else {
        if (parameter > 1.0) throw ValidationError("sqrt-alloc exponent alpha must be in (0, 1]");
        auto n = static_cast<std::size_t>(std::max(1.0, std::round(std::pow(t, parameter))));
        n = std::min(n, total_budget);
        plan.n = n;
        plan.m = std::max<std::size_t>(1, total_budget / n);
    }
    return plan;
}

BudgetPlan fixed_plan(std::size_t n, std::size_t m) {
    if (n < 1 || m < 1) throw ValidationError("N and M must be at least 1");
    BudgetPlan plan;
    plan.total_budget = n * m;
    plan.policy = BudgetPolicy::Ratio;
    plan.parameter = static_cast<double>(m) / static_cast<double>(n);
    plan.n = n;
    plan.m = m;
    return plan;
}

}  // namespace ccest
