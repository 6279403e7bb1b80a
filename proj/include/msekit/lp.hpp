#pragma once

// Dense two-phase simplex for the tiny equality-form programs that arise when
// locating the facial set of a log-linear model (at most a few hundred
// variables). Bland's rule keeps it cycle-free.

#include <Eigen/Dense>

namespace msekit::lp {

struct Result {
  bool feasible = false;
  bool bounded = true;
  double objective = 0.0;
  Eigen::VectorXd x;
};

/// maximize c'x subject to A x = b, x >= 0. Rows with negative b are negated.
Result maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

}  // namespace msekit::lp
