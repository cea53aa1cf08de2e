#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace bsda {

/// Cost used to mark pairs the caller will reject after assignment. Finite so
/// the solver stays well defined.
inline constexpr double kForbiddenCost = 1e9;

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total_cost = 0.0;
};

/// Minimum-cost one-to-one assignment of min(rows, cols) pairs on a
/// rectangular matrix (shortest augmenting path, O(n^2 m)). Rows are
/// inserted in index order and ties resolve toward the lowest column, so the
/// result depends only on the matrix contents.
Assignment hungarian(const Eigen::MatrixXd& cost);

}  // namespace bsda
