#pragma once

#include <span>
#include <vector>

namespace hardmine {

/// Result of a dense max-weight bipartite assignment.
struct AssignmentResult {
  std::vector<int> row_to_col;  ///< -1 when the row is unmatched
  double total = 0.0;           ///< canonical total of the chosen weights
};

/// Sum a multiset of pair weights in a fixed order (descending value) so that
/// two solutions picking the same multiset produce bit-identical totals.
double canonical_pair_total(std::vector<double> weights);

/// Maximum-weight bipartite matching on a dense row-major weight matrix.
/// Entries <= 0 mark forbidden pairs; only pairs with positive weight may be
/// matched. Among matchings of maximal total weight, returns the one whose
/// pair list, sorted by row, is lexicographically smallest in (row, col) —
/// ties are resolved exactly, not by perturbation, so equal-cost optima are
/// chosen deterministically no matter how the input was ordered.
AssignmentResult max_weight_assignment(int rows, int cols, std::span<const double> weights);

}  // namespace hardmine
