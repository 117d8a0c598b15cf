#include "mcpt/assignment.hpp"

#include <algorithm>
#include <cmath>

#include "mcpt/error.hpp"

namespace mcpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path solver with dual potentials on a square matrix.
// On return match_col[c] is the row assigned to column c, and the potentials
// satisfy cost[r][c] >= u[r] + v[c] with equality on matched pairs.
void solve_square(const std::vector<std::vector<double>>& a, int n,
                  std::vector<int>& match_col, std::vector<double>& u,
                  std::vector<double>& v) {
    u.assign(n + 1, 0.0);
    v.assign(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
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
            for (int j = 0; j <= n; ++j) {
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
    match_col.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) match_col[j - 1] = p[j] - 1;
}

// Kuhn augmenting path over the tight-edge subgraph.
bool try_kuhn(int r, const std::vector<std::vector<int>>& adj, std::vector<bool>& visited,
              std::vector<int>& col_of_row, std::vector<int>& row_of_col) {
    for (int c : adj[r]) {
        if (visited[c]) continue;
        visited[c] = true;
        if (row_of_col[c] < 0 || try_kuhn(row_of_col[c], adj, visited, col_of_row, row_of_col)) {
            col_of_row[r] = c;
            row_of_col[c] = r;
            return true;
        }
    }
    return false;
}

// Whether the tight subgraph admits a perfect matching once `forced` pairs are
// pinned: strip forced rows and columns, then match every remaining row.
bool feasible_completion(int n, const std::vector<std::vector<int>>& adj,
                         const std::vector<int>& forced_col_of_row) {
    std::vector<bool> col_forced(n, false);
    for (int r = 0; r < n; ++r)
        if (forced_col_of_row[r] >= 0) col_forced[forced_col_of_row[r]] = true;
    std::vector<std::vector<int>> free_adj(n);
    for (int r = 0; r < n; ++r) {
        if (forced_col_of_row[r] >= 0) continue;
        for (int c : adj[r])
            if (!col_forced[c]) free_adj[r].push_back(c);
    }
    std::vector<int> col_of_row(n, -1), row_of_col(n, -1);
    for (int r = 0; r < n; ++r) {
        if (forced_col_of_row[r] >= 0) continue;
        std::vector<bool> visited(n, false);
        if (!try_kuhn(r, free_adj, visited, col_of_row, row_of_col)) return false;
    }
    return true;
}

} // namespace

Assignment solve_assignment(const std::vector<std::vector<double>>& cost, double max_cost) {
    const int rows = static_cast<int>(cost.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(cost[0].size());
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != cols) throw_input("cost matrix is ragged");
        for (double v : row)
            if (!std::isfinite(v)) throw_input("cost matrix has non-finite entries");
    }
    Assignment result;
    if (rows == 0 || cols == 0) return result;

    // pad to square with zero-cost dummies; a genuine row matched to a dummy
    // column is simply unmatched
    const int n = std::max(rows, cols);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    double max_abs = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            a[r][c] = cost[r][c];
            max_abs = std::max(max_abs, std::abs(cost[r][c]));
        }

    std::vector<int> match_col;
    std::vector<double> u, v;
    solve_square(a, n, match_col, u, v);

    // tight-edge subgraph: exactly the edges any optimal matching may use
    const double tol = 1e-9 * (1.0 + max_abs);
    std::vector<std::vector<int>> adj(n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (a[r][c] - u[r + 1] - v[c + 1] <= tol) adj[r].push_back(c);

    // lexicographic refinement: give each genuine row in order the smallest
    // column that still allows a perfect tight completion; real columns are
    // preferred over dummies so earlier rows stay matched when possible
    std::vector<int> forced(n, -1);
    std::vector<bool> col_taken(n, false);
    for (int r = 0; r < rows; ++r) {
        std::vector<int> candidates;
        for (int c : adj[r])
            if (!col_taken[c] && c < cols) candidates.push_back(c);
        for (int c : adj[r])
            if (!col_taken[c] && c >= cols) candidates.push_back(c);
        bool placed = false;
        for (int c : candidates) {
            forced[r] = c;
            if (feasible_completion(n, adj, forced)) {
                col_taken[c] = true;
                placed = true;
                break;
            }
            forced[r] = -1;
        }
        if (!placed) throw_state("assignment refinement lost feasibility");
    }

    for (int r = 0; r < rows; ++r) {
        int c = forced[r];
        if (c >= cols) continue;
        if (cost[r][c] > max_cost) continue;
        result.pairs.emplace_back(r, c);
        result.total_cost += cost[r][c];
    }
    return result;
}

} // namespace mcpt
