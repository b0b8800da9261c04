#include "fxsmile/least_squares.hpp"

#include <cmath>
#include <limits>

#include "fxsmile/errors.hpp"

namespace fxsmile {

Bounds Bounds::unbounded(Eigen::Index n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

namespace {

constexpr double kInitialDamping = 1e-3;
constexpr double kMaxDamping = 1e16;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

// Evaluates without letting library errors escape: any failure reads as a
// non-finite residual.
Eigen::VectorXd safe_eval(const ResidualFn& fn, const Eigen::VectorXd& x, Eigen::Index m) {
  try {
    Eigen::VectorXd r = fn(x);
    if (r.size() == m || m < 0) return r;
  } catch (const Error&) {
  }
  return Eigen::VectorXd::Constant(std::max<Eigen::Index>(m, 1),
                                   std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

LsqResult least_squares_solve(const ResidualFn& residual_fn, const Eigen::VectorXd& x0,
                              const Bounds& bounds, const LsqOptions& opts) {
  const Eigen::Index n = x0.size();
  require(bounds.lower.size() == n && bounds.upper.size() == n,
          "least_squares_solve: bounds dimension mismatch");

  auto feasible = [&](Eigen::VectorXd x) {
    x = x.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    if (opts.project) opts.project(x);
    return x;
  };

  LsqResult out;
  out.x = feasible(x0);
  out.residuals = safe_eval(residual_fn, out.x, -1);
  if (!all_finite(out.residuals)) {
    out.norm = std::numeric_limits<double>::quiet_NaN();
    out.message = "non-finite residual at the initial point";
    return out;
  }
  const Eigen::Index m = out.residuals.size();
  out.norm = out.residuals.norm();

  double lambda = kInitialDamping;
  Eigen::MatrixXd jac(m, n);
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    out.iterations = iter;

    bool jac_ok = true;
    for (Eigen::Index j = 0; j < n && jac_ok; ++j) {
      double h = opts.fd_step * std::max(1.0, std::abs(out.x[j]));
      if (out.x[j] + h > bounds.upper[j]) h = -h;
      Eigen::VectorXd xp = out.x;
      xp[j] += h;
      Eigen::VectorXd rp = safe_eval(residual_fn, xp, m);
      if (!all_finite(rp)) {
        h = -h;
        xp[j] = out.x[j] + h;
        rp = safe_eval(residual_fn, xp, m);
      }
      if (!all_finite(rp)) jac_ok = false;
      jac.col(j) = (rp - out.residuals) / h;
    }
    if (!jac_ok) {
      out.message = "non-finite residual while differentiating";
      return out;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * out.residuals;
    if (grad.norm() == 0.0) {
      out.converged = true;
      out.message = "zero gradient";
      return out;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index j = 0; j < n; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd trial = feasible(out.x + step);
      const Eigen::VectorXd actual_step = trial - out.x;
      const Eigen::VectorXd r = safe_eval(residual_fn, trial, m);
      const double norm = all_finite(r) ? r.norm() : std::numeric_limits<double>::infinity();

      if (norm < out.norm) {
        const double improvement = out.norm - norm;
        out.x = trial;
        out.residuals = r;
        out.norm = norm;
        out.history.push_back(norm);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (actual_step.norm() < opts.step_tol) {
          out.converged = true;
          out.message = "step below tolerance";
          return out;
        }
        if (improvement < opts.improvement_tol) {
          out.converged = true;
          out.message = "residual improvement below tolerance";
          return out;
        }
      } else {
        if (actual_step.norm() < opts.step_tol) {
          out.converged = true;
          out.message = "step below tolerance";
          return out;
        }
        lambda *= 4.0;
        if (lambda > kMaxDamping) {
          out.converged = all_finite(r);
          out.message = "damping exhausted";
          return out;
        }
      }
    }
  }
  out.message = "iteration limit reached";
  return out;
}

}  // namespace fxsmile
