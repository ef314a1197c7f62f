#pragma once

#include <cstddef>
#include <vector>

namespace mlmcuq {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (weights sum to 2).
QuadratureRule gauss_legendre(std::size_t n);

/// Composite rule on [a, b]: `panels` equal panels of an n-point Gauss rule.
QuadratureRule composite_gauss(double a, double b, std::size_t panels, std::size_t n);

}  // namespace mlmcuq
