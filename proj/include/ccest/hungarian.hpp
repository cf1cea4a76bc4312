#pragma once

#include "ccest/matrix.hpp"

#include <vector>

namespace ccest {

// Minimum-cost assignment of rows to distinct columns (rows <= cols).
// Returns the column of each row.
std::vector<int> hungarian_min_cost(const MatrixD& cost);

}  // namespace ccest
