#pragma once

#include <vector>

namespace cylrev {

// Minimum-cost one-to-one assignment (Hungarian / Jonker-Volgenant, O(n^3)).
// cost[i][j] is the cost of giving row i to column j. Rectangular inputs are
// supported; when rows > cols the surplus rows stay unassigned (-1).
// Returns assignment[row] = col.
std::vector<int> hungarian_assign(const std::vector<std::vector<double>>& cost);

double assignment_cost(const std::vector<std::vector<double>>& cost,
                       const std::vector<int>& assign);

}  // namespace cylrev
