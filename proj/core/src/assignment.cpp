#include "hardmine/assignment.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <utility>

namespace hardmine {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Reduced costs this close to zero are treated as exact ties. Genuine ties
// (duplicated boxes and the like) drift from zero only by accumulated rounding
// (~1e-14 for realistic sizes); random instances essentially never land this
// close, so the expensive tie resolution below stays off the hot path.
constexpr double kTieEps = 1e-9;

struct PaddedSolution {
  std::vector<std::pair<int, int>> pairs;  // real pairs only (weight > 0), by row
  std::vector<double> pair_weights;
  std::vector<double> row_potential;  // duals of the min-cost form, padded size
  std::vector<double> col_potential;
};

// Shortest-augmenting-path solver for the square min-cost assignment problem
// (the classic O(n^3) formulation with row/column potentials). The weight
// matrix is padded to square with zero-cost cells, and maximization is run as
// minimization of the negated weights. Column scans go in ascending order and
// keep the first minimum, so the result is deterministic.
PaddedSolution solve_padded(int rows, int cols, std::span<const double> weights) {
  const int n = std::max(rows, cols);
  std::vector<double> cost(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double w = weights[static_cast<std::size_t>(r) * cols + c];
      if (w > 0.0) cost[static_cast<std::size_t>(r) * n + c] = -w;
    }
  }

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);  // p[j]: row matched to column j, 1-based
  std::vector<double> minv(n + 1, 0.0);
  std::vector<char> used(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  PaddedSolution out;
  out.row_potential.assign(n, 0.0);
  out.col_potential.assign(n, 0.0);
  for (int j = 1; j <= n; ++j) {
    const int i = p[j];
    out.row_potential[i - 1] = u[i];
    out.col_potential[j - 1] = v[j];
    const int r = i - 1;
    const int c = j - 1;
    if (r < rows && c < cols) {
      const double w = weights[static_cast<std::size_t>(r) * cols + c];
      if (w > 0.0) {
        out.pairs.emplace_back(r, c);
        out.pair_weights.push_back(w);
      }
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

// True when some matchable cell outside the chosen matching is tight under the
// solver's potentials, i.e. an equal-total alternative could exist.
bool tie_possible(int rows, int cols, std::span<const double> weights,
                  const PaddedSolution& sol) {
  const int n = std::max(rows, cols);
  std::vector<char> chosen(static_cast<std::size_t>(rows) * cols, 0);
  for (const auto& [r, c] : sol.pairs) {
    chosen[static_cast<std::size_t>(r) * cols + c] = 1;
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * cols + c;
      const double w = weights[idx];
      if (w <= 0.0 || chosen[idx]) continue;
      const double reduced = -w - sol.row_potential[r] - sol.col_potential[c];
      (void)n;
      if (reduced <= kTieEps && reduced >= -kTieEps) return true;
    }
  }
  return false;
}

double weight_at(std::span<const double> weights, int cols, int r, int c) {
  return weights[static_cast<std::size_t>(r) * cols + c];
}

// Best achievable canonical total for rows [first_row, rows) over the columns
// not yet in use, added on top of the already fixed pair weights.
double best_completion_total(int rows, int cols, std::span<const double> weights,
                             int first_row, const std::vector<char>& used_col,
                             const std::vector<double>& fixed_weights) {
  std::vector<int> sub_cols;
  for (int c = 0; c < cols; ++c) {
    if (!used_col[c]) sub_cols.push_back(c);
  }
  const int sub_rows = rows - first_row;
  std::vector<double> all = fixed_weights;
  if (sub_rows > 0 && !sub_cols.empty()) {
    std::vector<double> sub(static_cast<std::size_t>(sub_rows) * sub_cols.size(), 0.0);
    for (int r = 0; r < sub_rows; ++r) {
      for (std::size_t c = 0; c < sub_cols.size(); ++c) {
        sub[static_cast<std::size_t>(r) * sub_cols.size() + c] =
            weight_at(weights, cols, first_row + r, sub_cols[c]);
      }
    }
    PaddedSolution best = solve_padded(sub_rows, static_cast<int>(sub_cols.size()), sub);
    all.insert(all.end(), best.pair_weights.begin(), best.pair_weights.end());
  }
  return canonical_pair_total(std::move(all));
}

// Exact tie resolution: walk candidate pairs in (row, col) order and keep a
// pair whenever the optimum total is still reachable with it fixed. The result
// is the lexicographically smallest pair list among the exact optima. Returns
// nullopt if rounding kept the rebuilt total from matching the target bit for
// bit, in which case the caller falls back to the unrefined solution.
std::optional<std::vector<std::pair<int, int>>> lexicographic_refine(
    int rows, int cols, std::span<const double> weights, double target) {
  std::vector<std::pair<int, int>> fixed;
  std::vector<double> fixed_weights;
  std::vector<char> used_col(cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (used_col[c]) continue;
      const double w = weight_at(weights, cols, r, c);
      if (w <= 0.0) continue;
      std::vector<double> trial = fixed_weights;
      trial.push_back(w);
      used_col[c] = 1;
      if (best_completion_total(rows, cols, weights, r + 1, used_col, trial) == target) {
        fixed.emplace_back(r, c);
        fixed_weights.push_back(w);
        break;
      }
      used_col[c] = 0;
    }
  }
  if (canonical_pair_total(fixed_weights) != target) return std::nullopt;
  return fixed;
}

}  // namespace

double canonical_pair_total(std::vector<double> weights) {
  std::sort(weights.begin(), weights.end(), std::greater<double>());
  double total = 0.0;
  for (double w : weights) total += w;
  return total;
}

AssignmentResult max_weight_assignment(int rows, int cols, std::span<const double> weights) {
  AssignmentResult result;
  result.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return result;

  bool any_positive = false;
  for (double w : weights) {
    if (w > 0.0) {
      any_positive = true;
      break;
    }
  }
  if (!any_positive) return result;

  PaddedSolution sol = solve_padded(rows, cols, weights);
  const double target = canonical_pair_total(sol.pair_weights);
  const bool maybe_tied = tie_possible(rows, cols, weights, sol);
  std::vector<std::pair<int, int>> pairs = std::move(sol.pairs);
  if (maybe_tied) {
    if (auto refined = lexicographic_refine(rows, cols, weights, target)) {
      pairs = std::move(*refined);
    }
  }
  for (const auto& [r, c] : pairs) {
    result.row_to_col[r] = c;
  }
  result.total = target;
  return result;
}

}  // namespace hardmine
