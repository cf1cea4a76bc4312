#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ccest {

enum class BudgetPolicy { Ratio, SqrtAlloc };

BudgetPolicy budget_policy_from_string(std::string_view name);
std::string_view to_string(BudgetPolicy p);

inline constexpr double kDefaultRatio = 7.0;

/// How a pair-draw budget T splits into N vertices with M neighbor draws each.
struct BudgetPlan {
    std::size_t total_budget = 0;
    BudgetPolicy policy = BudgetPolicy::Ratio;
    double parameter = kDefaultRatio;  // r for Ratio, alpha for SqrtAlloc
    std::size_t n = 1;
    std::size_t m = 1;

    double ratio() const noexcept { return static_cast<double>(m) / static_cast<double>(n); }
    std::size_t draws() const noexcept { return n * m; }
};

// Ratio:     N = max(1, round(sqrt(T / r))), M = max(1, round(r N)), then shrunk so N M <= T.
// SqrtAlloc: N = max(1, round(T^alpha)), M = max(1, floor(T / N)).
BudgetPlan plan_budget(std::size_t total_budget, BudgetPolicy policy = BudgetPolicy::Ratio,
                       double parameter = kDefaultRatio);

// Explicit N and M (T = N M).
BudgetPlan fixed_plan(std::size_t n, std::size_t m);

}  // namespace ccest
