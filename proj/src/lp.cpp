#include "msekit/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace msekit::lp {

namespace {

constexpr double kPivotTol = 1e-9;

struct Tableau {
  Eigen::MatrixXd t;  // rows x (cols + 1); last column is the right-hand side
  std::vector<int> basis;
  std::vector<bool> row_active;

  int cols() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int i = 0; i < t.rows(); ++i)
      if (i != row && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(row);
    basis[static_cast<std::size_t>(row)] = col;
  }

  // Maximizes cost'x over columns flagged in `allowed`. Returns false when unbounded.
  bool optimize(const Eigen::VectorXd& cost, const std::vector<bool>& allowed, double obj_tol) {
    const int m = static_cast<int>(t.rows());
    for (int iter = 0; iter < 50000; ++iter) {
      int entering = -1;
      for (int j = 0; j < cols() && entering < 0; ++j) {
        if (!allowed[static_cast<std::size_t>(j)]) continue;
        double reduced = cost(j);
        for (int i = 0; i < m; ++i)
          if (row_active[static_cast<std::size_t>(i)]) reduced -= cost(basis[static_cast<std::size_t>(i)]) * t(i, j);
        if (reduced > obj_tol) entering = j;
      }
      if (entering < 0) return true;
      int leaving = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (!row_active[static_cast<std::size_t>(i)] || t(i, entering) <= kPivotTol) continue;
        const double ratio = t(i, cols()) / t(i, entering);
        if (ratio < best - 1e-12 ||
            (ratio <= best + 1e-12 && leaving >= 0 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
          best = ratio;
          leaving = i;
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
    return true;
  }
};

}  // namespace

Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  tab.row_active.assign(static_cast<std::size_t>(m), true);
  for (int i = 0; i < m; ++i) {
    const double sign = b(i) < 0 ? -1.0 : 1.0;
    tab.t.block(i, 0, 1, n) = sign * A.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, n + m) = sign * b(i);
    tab.basis[static_cast<std::size_t>(i)] = n + i;
  }
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double obj_tol = 1e-10;

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setConstant(-1.0);
  std::vector<bool> all(static_cast<std::size_t>(n + m), true);
  tab.optimize(phase1, all, obj_tol);

  Result result;
  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i)
    if (tab.basis[static_cast<std::size_t>(i)] >= n) infeasibility += tab.t(i, n + m);
  if (infeasibility > 1e-9 * scale) return result;
  result.feasible = true;

  // Drive remaining (zero-level) artificials out of the basis; rows that
  // cannot be pivoted are redundant.
  for (int i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    int col = -1;
    for (int j = 0; j < n && col < 0; ++j)
      if (std::fabs(tab.t(i, j)) > kPivotTol) col = j;
    if (col >= 0)
      tab.pivot(i, col);
    else
      tab.row_active[static_cast<std::size_t>(i)] = false;
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  std::vector<bool> originals(static_cast<std::size_t>(n + m), false);
  for (int j = 0; j < n; ++j) originals[static_cast<std::size_t>(j)] = true;
  result.bounded = tab.optimize(phase2, originals, obj_tol);

  result.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int col = tab.basis[static_cast<std::size_t>(i)];
    if (tab.row_active[static_cast<std::size_t>(i)] && col < n) result.x(col) = std::max(0.0, tab.t(i, n + m));
  }
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace msekit::lp
