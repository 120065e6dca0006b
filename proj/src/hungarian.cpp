#include "tomap/hungarian.hpp"

#include <algorithm>
#include <limits>

#include "tomap/error.hpp"

namespace tomap {

namespace {

// Rows <= cols. Returns col_of_row.
std::vector<int> solve_min(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

}  // namespace

Assignment hungarian_assign(const Eigen::MatrixXd& cost, bool maximize) {
  if (!cost.allFinite()) throw Error(ErrorCode::InvalidArgument, "assignment costs must be finite");
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  Assignment out;
  std::vector<bool> row_used(rows, false), col_used(cols, false);

  if (rows > 0 && cols > 0) {
    const Eigen::MatrixXd signed_cost = maximize ? Eigen::MatrixXd(-cost) : cost;
    const bool transposed = rows > cols;
    const std::vector<int> match =
        transposed ? solve_min(signed_cost.transpose()) : solve_min(signed_cost);
    for (int i = 0; i < static_cast<int>(match.size()); ++i) {
      if (match[i] < 0) continue;
      const int r = transposed ? match[i] : i;
      const int c = transposed ? i : match[i];
      out.pairs.emplace_back(r, c);
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (const auto& [r, c] : out.pairs) {
      row_used[r] = true;
      col_used[c] = true;
      out.total += cost(r, c);
    }
  }
  for (int r = 0; r < rows; ++r) if (!row_used[r]) out.unassigned_rows.push_back(r);
  for (int c = 0; c < cols; ++c) if (!col_used[c]) out.unassigned_cols.push_back(c);
  return out;
}

}  // namespace tomap
