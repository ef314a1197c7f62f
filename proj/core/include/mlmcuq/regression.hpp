#pragma once

#include <span>

namespace mlmcuq {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept. Throws FitDegenerate when
/// fewer than two points are given or x has zero spread.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of log(y) against log(x); all inputs must be positive.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace mlmcuq
