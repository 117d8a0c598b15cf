#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace mcpt {

struct Assignment {
    std::vector<std::pair<int, int>> pairs; // (row, col), sorted by row
    double total_cost = 0.0;                // sum over kept pairs
};

/// Minimum-total-cost matching on a rectangular cost matrix. The smaller side
/// is matched completely; pairs whose cost exceeds max_cost are dropped after
/// solving. Among cost-optimal matchings the result is the lexicographically
/// smallest (row, col) pair list. Entries must be finite.
Assignment solve_assignment(const std::vector<std::vector<double>>& cost,
                            double max_cost = std::numeric_limits<double>::infinity());

} // namespace mcpt
