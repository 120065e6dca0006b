#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tomap {

struct Assignment {
  /// (row, column) pairs; min(rows, cols) of them for a non-empty matrix.
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unassigned_rows;
  std::vector<int> unassigned_cols;
  /// Sum of the original costs over `pairs`.
  double total = 0.0;
};

/// Optimal one-to-one assignment on a rectangular matrix of finite costs
/// (Kuhn-Munkres with potentials, O(n^2 m)). Minimizes the total unless
/// `maximize` is set. Gating is left to the caller.
Assignment hungarian_assign(const Eigen::MatrixXd& cost, bool maximize = false);

}  // namespace tomap
