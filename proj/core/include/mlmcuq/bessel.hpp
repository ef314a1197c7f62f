#pragma once

#include <vector>

namespace mlmcuq {

/// Cylinder functions of integer order for real argument.
///
/// J_n is computed for all orders at once by Miller's downward recurrence,
/// normalized with J_0 + 2 sum_k J_{2k} = 1. Y_0 and Y_1 come from their
/// Neumann series in the J_{2k}, which has no cancellation for moderate
/// arguments, and Y_n for n >= 2 from the (stable) upward recurrence.
struct CylinderFunctions {
  std::vector<double> j;  ///< J_0 .. J_nmax
  std::vector<double> y;  ///< Y_0 .. Y_nmax (empty when x == 0)
};

/// Requires x >= 0 and nmax >= 0. At x == 0 only J is filled.
CylinderFunctions cylinder_functions(int nmax, double x);

std::vector<double> bessel_j_sequence(int nmax, double x);

double bessel_j(int n, double x);
double bessel_y(int n, double x);

}  // namespace mlmcuq
