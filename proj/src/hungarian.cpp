#include "bsda/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsda/geometry.hpp"

namespace bsda {
namespace {

// Rows <= cols. Potentials u (rows) and v (cols), 1-based with a virtual
// column 0 holding the row currently being inserted.
std::vector<int> solve_wide(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
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

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (!cost.allFinite()) throw Error("assignment costs must be finite (use kForbiddenCost)");

  const bool transposed = cost.rows() > cost.cols();
  const Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const std::vector<int> match = solve_wide(a);
  for (int r = 0; r < static_cast<int>(match.size()); ++r) {
    if (match[r] < 0) continue;
    out.pairs.emplace_back(transposed ? match[r] : r, transposed ? r : match[r]);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [r, c] : out.pairs) out.total_cost += cost(r, c);
  return out;
}

}  // namespace bsda
