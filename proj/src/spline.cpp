#include "fxsmile/spline.hpp"

#include <algorithm>
#include <cmath>

#include "fxsmile/errors.hpp"

namespace fxsmile {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> x, std::span<const double> y,
                                       Extrapolation extrapolation)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), m_(x.size(), 0.0),
      extrapolation_(extrapolation) {
  require(x.size() == y.size(), "spline: abscissae and values differ in length");
  require(x.size() >= 2, "spline: need at least two nodes");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "spline: non-finite node");
    if (i > 0) require(x[i] > x[i - 1], "spline: abscissae must be strictly increasing");
  }

  // Thomas algorithm on the interior second derivatives.
  const std::size_t n = x_.size();
  if (n == 2) return;
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
    c[i] = h1 / diag;
    d[i] = (rhs - h0 * d[i - 1]) / diag;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = d[i] - c[i] * m_[i + 1];
  }
}

namespace {

std::size_t segment(const std::vector<double>& x, double v) {
  const auto it = std::upper_bound(x.begin(), x.end(), v);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x.begin() - 1, 0));
  return std::min(i, x.size() - 2);
}

}  // namespace

double NaturalCubicSpline::operator()(double x) const {
  if (x <= x_.front() || x >= x_.back()) {
    const bool left = x <= x_.front();
    const double xe = left ? x_.front() : x_.back();
    const double ye = left ? y_.front() : y_.back();
    if (extrapolation_ == Extrapolation::Flat || x == xe) return ye;
    return ye + derivative(xe) * (x - xe);
  }
  const std::size_t i = segment(x_, x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double NaturalCubicSpline::derivative(double x) const {
  if (extrapolation_ == Extrapolation::Flat && (x < x_.front() || x > x_.back())) return 0.0;
  const double xc = std::clamp(x, x_.front(), x_.back());
  const std::size_t i = segment(x_, xc);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - xc) / h;
  const double b = (xc - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h +
         (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
}

}  // namespace fxsmile
