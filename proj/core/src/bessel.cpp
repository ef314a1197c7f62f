#include "mlmcuq/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlmcuq/error.hpp"

namespace mlmcuq {

namespace {

constexpr double kRescaleAbove = 1e250;

int miller_start(int nmax, double x) {
  const int base = std::max(nmax, static_cast<int>(x));
  const int start = base + 20 + static_cast<int>(std::sqrt(40.0 * (base + 1)));
  return start + (start % 2);  // even, so the normalization sum lines up
}

}  // namespace

std::vector<double> bessel_j_sequence(int nmax, double x) {
  if (nmax < 0 || !(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bessel: need nmax >= 0, x >= 0");
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int start = miller_start(nmax, x);
  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  j[static_cast<std::size_t>(start) + 1] = 0.0;
  j[static_cast<std::size_t>(start)] = 1e-300;
  for (int n = start; n >= 1; --n) {
    const auto un = static_cast<std::size_t>(n);
    j[un - 1] = (2.0 * n / x) * j[un] - j[un + 1];
    if (std::abs(j[un - 1]) > kRescaleAbove) {
      for (std::size_t k = un - 1; k <= static_cast<std::size_t>(start); ++k) j[k] /= kRescaleAbove;
    }
  }
  double norm = j[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * j[static_cast<std::size_t>(k)];
  for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] = j[static_cast<std::size_t>(n)] / norm;
  return out;
}

CylinderFunctions cylinder_functions(int nmax, double x) {
  CylinderFunctions f;
  if (x == 0.0) {
    f.j = bessel_j_sequence(nmax, 0.0);
    return f;
  }
  // The Neumann series needs J up to roughly the point where J_n decays.
  const int series_top = std::max(nmax, static_cast<int>(1.5 * x) + 40);
  const std::vector<double> jj = bessel_j_sequence(series_top + 1, x);
  f.j.assign(jj.begin(), jj.begin() + nmax + 1);

  const double log_term = std::log(0.5 * x) + std::numbers::egamma;
  double s0 = 0.0, s1 = 0.0;
  for (int k = 1; 2 * k + 1 <= series_top + 1; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const auto k2 = static_cast<std::size_t>(2 * k);
    s0 += sign * jj[k2] / k;
    s1 += sign * (jj[k2 - 1] - jj[k2 + 1]) / (2.0 * k);
  }
  const double two_over_pi = 2.0 / std::numbers::pi;
  const double y0 = two_over_pi * log_term * jj[0] - 2.0 * two_over_pi * s0;
  const double y1 = -two_over_pi * (jj[0] / x - log_term * jj[1]) + 2.0 * two_over_pi * s1;

  f.y.resize(static_cast<std::size_t>(nmax) + 1);
  f.y[0] = y0;
  if (nmax >= 1) f.y[1] = y1;
  for (int n = 1; n < nmax; ++n) {
    const auto un = static_cast<std::size_t>(n);
    f.y[un + 1] = (2.0 * n / x) * f.y[un] - f.y[un - 1];
  }
  return f;
}

double bessel_j(int n, double x) {
  const int m = std::abs(n);
  double v = 0.0;
  if (x >= 0.0) {
    v = bessel_j_sequence(m, x)[static_cast<std::size_t>(m)];
  } else {
    v = bessel_j_sequence(m, -x)[static_cast<std::size_t>(m)];
    if (m % 2 == 1) v = -v;
  }
  return (n < 0 && m % 2 == 1) ? -v : v;
}

double bessel_y(int n, double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "bessel_y needs x > 0");
  const int m = std::abs(n);
  const double v = cylinder_functions(m, x).y[static_cast<std::size_t>(m)];
  return (n < 0 && m % 2 == 1) ? -v : v;
}

}  // namespace mlmcuq
