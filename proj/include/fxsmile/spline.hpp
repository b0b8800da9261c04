#pragma once

#include <span>
#include <vector>

namespace fxsmile {

/// Behaviour beyond the end nodes.
enum class Extrapolation {
  Flat,    ///< constant end value
  Linear,  ///< tangent line at the end node
};

/// Natural cubic spline (zero second derivative at both ends).
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  /// Abscissae must be strictly increasing; at least two nodes.
  NaturalCubicSpline(std::span<const double> x, std::span<const double> y,
                     Extrapolation extrapolation = Extrapolation::Flat);

  double operator()(double x) const;
  /// First derivative; zero outside the nodes under flat extrapolation.
  double derivative(double x) const;

  Extrapolation extrapolation() const noexcept { return extrapolation_; }

  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& y() const noexcept { return y_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the nodes
  Extrapolation extrapolation_ = Extrapolation::Flat;
};

}  // namespace fxsmile
