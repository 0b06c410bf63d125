#include "cylrev/hungarian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cylrev {

namespace {

// Potentials + shortest augmenting paths; requires rows <= cols.
std::vector<int> solve_wide(const std::vector<std::vector<double>>& a) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(a[0].size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(m + 1, 0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
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
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assign(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] > 0) assign[p[j] - 1] = j - 1;
    return assign;
}

}  // namespace

std::vector<int> hungarian_assign(const std::vector<std::vector<double>>& cost) {
    if (cost.empty()) return {};
    const int n = static_cast<int>(cost.size());
    const int m = static_cast<int>(cost[0].size());
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != m)
            throw std::invalid_argument("cost matrix is ragged");
    if (n <= m) return solve_wide(cost);
    // Transpose, solve, invert.
    std::vector<std::vector<double>> t(m, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) t[j][i] = cost[i][j];
    std::vector<int> col_row = solve_wide(t);
    std::vector<int> assign(n, -1);
    for (int j = 0; j < m; ++j)
        if (col_row[j] >= 0) assign[col_row[j]] = j;
    return assign;
}

double assignment_cost(const std::vector<std::vector<double>>& cost,
                       const std::vector<int>& assign) {
    double total = 0;
    for (size_t i = 0; i < assign.size(); ++i)
        if (assign[i] >= 0) total += cost[i][assign[i]];
    return total;
}

}  // namespace cylrev
