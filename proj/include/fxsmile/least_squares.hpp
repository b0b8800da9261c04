#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fxsmile {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Box constraint; use +-infinity for free coordinates.
struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Bounds unbounded(Eigen::Index n);
};

struct LsqOptions {
  int max_iterations = 200;
  double step_tol = 1e-10;         ///< stop when the accepted step norm drops below
  double improvement_tol = 1e-12;  ///< stop when the residual norm improves by less
  double fd_step = 1e-6;           ///< forward-difference Jacobian step (relative to max(1,|x|))
  /// Optional map onto a non-box feasible set, applied after the box clamp.
  std::function<void(Eigen::VectorXd&)> project;
};

struct LsqResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  double norm = 0.0;  ///< Euclidean norm of the residuals at x
  bool converged = false;
  int iterations = 0;
  std::string message;
  std::vector<double> history;  ///< residual norm after each accepted step
};

/// Levenberg-Marquardt with forward-difference Jacobian and projection onto
/// the bounds. Non-finite residuals at a trial point are treated as a
/// rejected step (more damping); non-finite residuals at the start or
/// damping blow-up end the run with converged = false.
LsqResult least_squares_solve(const ResidualFn& residual_fn, const Eigen::VectorXd& x0,
                              const Bounds& bounds, const LsqOptions& opts = {});

}  // namespace fxsmile
