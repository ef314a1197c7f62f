#pragma once

#include <complex>
#include <span>
#include <vector>

#include "mlmcuq/geometry_map.hpp"
#include "mlmcuq/param_space.hpp"

namespace mlmcuq {

using Complex = std::complex<double>;

/// Penetrable disc hit by the plane wave exp(i kappa1 d.x). Inside the disc
/// the field solves Delta u + kappa2^2 u = 0; across the boundary u and the
/// flux (1 outside, alpha2 inside) are continuous.
struct MieScatterer {
  double radius = 0.01;
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double alpha2 = 1.0;
  int truncation = 0;  ///< modes |n| <= truncation
  Point2 direction{1.0, 0.0};

  static int default_truncation(double kappa, double radius);
  /// Scatterer with the default truncation ceil(max(kappa) * radius) + 15.
  static MieScatterer make(double radius, double kappa1, double kappa2, double alpha2,
                           Point2 direction = {1.0, 0.0});
  /// Throws InvalidScatterer on nonpositive data or too few modes.
  void validate() const;
};

/// Mode coefficients, stored for n = -N..N at index n + N.
struct ExpansionCoefficients {
  int truncation = 0;
  std::vector<Complex> incident;
  std::vector<Complex> interior;
  std::vector<Complex> scattered;

  Complex a(int n) const { return interior[static_cast<std::size_t>(n + truncation)]; }
  Complex b(int n) const { return scattered[static_cast<std::size_t>(n + truncation)]; }
  Complex c(int n) const { return incident[static_cast<std::size_t>(n + truncation)]; }
};

/// Solves the 2x2 matching system of every mode. Throws ModeResonance when a
/// mode determinant falls below 1e-14 in magnitude.
ExpansionCoefficients expansion_coefficients(const MieScatterer& s);

/// Which series to sum at a point.
enum class FieldBranch { Automatic, Interior, Exterior };

/// Total field u(x): interior series for |x| < radius, otherwise the plane
/// wave (closed form) plus the scattered series.
Complex field_at(const MieScatterer& s, const ExpansionCoefficients& coeffs, Point2 x,
                 FieldBranch branch = FieldBranch::Automatic);

/// Radial derivative of the chosen series at x (x != 0).
Complex radial_derivative_at(const MieScatterer& s, const ExpansionCoefficients& coeffs, Point2 x,
                             FieldBranch branch);

/// Scatterer family with random radius rho(y) = r0 (1 + c y_1).
struct MieFamily {
  double r0 = 0.01;
  double kappa1 = 209.44;
  double kappa2 = 418.88;
  double alpha2 = 4.0;
  double c = 0.1;
  Point2 direction{1.0, 0.0};

  void validate() const;
  MieScatterer at(const ParamVector& y) const;
};

/// Re u(y; x_i) for the family member selected by y.
std::vector<double> radial_qoi(const MieFamily& family, const ParamVector& y,
                               std::span<const Point2> points);

}  // namespace mlmcuq
