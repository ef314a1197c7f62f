#pragma once

#include <array>

#include "mlmcuq/param_space.hpp"

namespace mlmcuq {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const noexcept;
  double angle() const noexcept;  ///< in [0, 2*pi)
};

/// Row-major 2x2 matrix.
struct Mat2 {
  double a00 = 1.0, a01 = 0.0;
  double a10 = 0.0, a11 = 1.0;

  double det() const noexcept { return a00 * a11 - a01 * a10; }
  Mat2 transpose() const noexcept { return {a00, a10, a01, a11}; }
  Mat2 inverse() const;
  Mat2 operator*(const Mat2& o) const noexcept;
  Mat2 operator*(double s) const noexcept { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
};

/// Singular values (max, min) of a 2x2 matrix, closed form.
std::array<double, 2> singular_values(const Mat2& m) noexcept;

/// Eigenvalues (ascending) of a symmetric 2x2 matrix.
std::array<double, 2> symmetric_eigenvalues(const Mat2& m) noexcept;

/// Piecewise-linear radial cutoff: 0 up to inner_cutoff, rising to 1 at the
/// interface radius, falling back to 0 at outer_cutoff.
struct Mollifier {
  double inner_cutoff = 0.0;
  double interface_radius = 0.0;
  double outer_cutoff = 0.0;

  /// Throws InvalidGeometry unless inner < interface < outer.
  void validate() const;

  double value(double rho) const noexcept;
  double value(double rho, double interface_radius_at_angle) const noexcept;
  /// d chi / d rho away from the kink circles.
  double slope(double rho, double interface_radius_at_angle) const noexcept;
  /// d chi / d (interface radius), used when the nominal radius varies with angle.
  double interface_sensitivity(double rho, double interface_radius_at_angle) const noexcept;
};

struct JacobianResult {
  Mat2 matrix;
  double sigma_min = 1.0;
  double sigma_max = 1.0;
};

struct TransformedCoefficients {
  Mat2 alpha_hat;
  double kappa2_hat = 0.0;
};

/// Material data of the transmission problem: alpha = 1, kappa^2 = kappa1^2
/// outside; alpha = alpha2, kappa^2 = alpha2 * kappa2^2 inside.
struct Materials {
  double alpha2 = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 1.0;
};

/// Radial perturbation of the identity carrying the nominal interface onto
/// the realization r(y; .).
class DomainMap {
 public:
  /// Throws InvalidGeometry on an inconsistent mollifier (interface radius is
  /// taken from the nominal radius at each angle; the mollifier's own
  /// interface_radius must equal the nominal infimum for constant nominals).
  DomainMap(Mollifier mollifier, CoefficientSequence sequence, NominalRadius nominal);

  /// Reference setup: constant nominal r0, cutoffs r0/4 and r_out.
  static DomainMap circular(double r0, double r_out, CoefficientSequence sequence,
                            double inner_cutoff_ratio = 0.25);

  const Mollifier& mollifier() const noexcept { return mollifier_; }
  const CoefficientSequence& sequence() const noexcept { return sequence_; }
  const NominalRadius& nominal() const noexcept { return nominal_; }

  Point2 map_point(const ParamVector& y, Point2 x_hat) const;
  JacobianResult jacobian(const ParamVector& y, Point2 x_hat) const;
  TransformedCoefficients transformed_coefficients(const ParamVector& y, Point2 x_hat,
                                                   const Materials& materials) const;
  Point2 inverse_map_point(const ParamVector& y, Point2 x) const;
  /// r(y; arg x0) - |x0|: positive inside the scatterer, zero on the interface.
  double interface_signed_gap(const ParamVector& y, Point2 x0) const;

  /// Mapped radius rho + chi(rho) * (r(y; phi) - r0(phi)) along the ray phi.
  double mapped_radius(const ParamVector& y, double rho_hat, double phi) const;

 private:
  Mollifier mollifier_;
  CoefficientSequence sequence_;
  NominalRadius nominal_;
};

}  // namespace mlmcuq
