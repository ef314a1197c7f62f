#include "mlmcuq/geometry_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlmcuq/error.hpp"

namespace mlmcuq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kKinkTolerance = 1e-12;

}  // namespace

double Point2::norm() const noexcept { return std::hypot(x, y); }

double Point2::angle() const noexcept {
  double a = std::atan2(y, x);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

Mat2 Mat2::inverse() const {
  const double d = det();
  if (d == 0.0) throw Error(ErrorCode::DegenerateMap, "singular 2x2 matrix");
  return {a11 / d, -a01 / d, -a10 / d, a00 / d};
}

Mat2 Mat2::operator*(const Mat2& o) const noexcept {
  return {a00 * o.a00 + a01 * o.a10, a00 * o.a01 + a01 * o.a11,
          a10 * o.a00 + a11 * o.a10, a10 * o.a01 + a11 * o.a11};
}

std::array<double, 2> singular_values(const Mat2& m) noexcept {
  const double s = std::hypot(m.a00 + m.a11, m.a10 - m.a01);
  const double d = std::hypot(m.a00 - m.a11, m.a10 + m.a01);
  return {0.5 * (s + d), 0.5 * std::abs(s - d)};
}

std::array<double, 2> symmetric_eigenvalues(const Mat2& m) noexcept {
  const double mean = 0.5 * (m.a00 + m.a11);
  const double half_diff = 0.5 * (m.a00 - m.a11);
  const double off = 0.5 * (m.a01 + m.a10);
  const double r = std::hypot(half_diff, off);
  return {mean - r, mean + r};
}

void Mollifier::validate() const {
  if (!(inner_cutoff > 0.0 && inner_cutoff < interface_radius && interface_radius < outer_cutoff))
    throw Error(ErrorCode::InvalidGeometry,
                "mollifier requires 0 < inner_cutoff < interface_radius < outer_cutoff");
}

double Mollifier::value(double rho) const noexcept { return value(rho, interface_radius); }

double Mollifier::value(double rho, double r0) const noexcept {
  if (rho <= inner_cutoff || rho >= outer_cutoff) return 0.0;
  if (rho <= r0) return (rho - inner_cutoff) / (r0 - inner_cutoff);
  return (outer_cutoff - rho) / (outer_cutoff - r0);
}

double Mollifier::slope(double rho, double r0) const noexcept {
  if (rho <= inner_cutoff || rho >= outer_cutoff) return 0.0;
  if (rho <= r0) return 1.0 / (r0 - inner_cutoff);
  return -1.0 / (outer_cutoff - r0);
}

double Mollifier::interface_sensitivity(double rho, double r0) const noexcept {
  if (rho <= inner_cutoff || rho >= outer_cutoff) return 0.0;
  if (rho <= r0) {
    const double w = r0 - inner_cutoff;
    return -(rho - inner_cutoff) / (w * w);
  }
  const double w = outer_cutoff - r0;
  return (outer_cutoff - rho) / (w * w);
}

DomainMap::DomainMap(Mollifier mollifier, CoefficientSequence sequence, NominalRadius nominal)
    : mollifier_(mollifier), sequence_(std::move(sequence)), nominal_(std::move(nominal)) {
  mollifier_.validate();
  // The nominal interface must stay strictly inside the mollifier support.
  for (int i = 0; i < 720; ++i) {
    const double phi = kTwoPi * i / 720.0;
    const double r0 = nominal_(phi);
    if (!(r0 > mollifier_.inner_cutoff && r0 < mollifier_.outer_cutoff))
      throw Error(ErrorCode::InvalidGeometry, "nominal radius leaves the mollifier support");
  }
}

DomainMap DomainMap::circular(double r0, double r_out, CoefficientSequence sequence,
                              double inner_cutoff_ratio) {
  Mollifier m{inner_cutoff_ratio * r0, r0, r_out};
  sequence.nominal_radius_min = r0;
  return DomainMap(m, std::move(sequence), NominalRadius::constant(r0));
}

double DomainMap::mapped_radius(const ParamVector& y, double rho_hat, double phi) const {
  const double chi = mollifier_.value(rho_hat, nominal_(phi));
  if (chi == 0.0) return rho_hat;
  return rho_hat + chi * radius_perturbation(sequence_, y, phi);
}

Point2 DomainMap::map_point(const ParamVector& y, Point2 x_hat) const {
  const double rho = x_hat.norm();
  if (rho == 0.0) {
    if (mollifier_.value(0.0, nominal_(0.0)) != 0.0)
      throw Error(ErrorCode::UndefinedDirection, "radial direction undefined at the origin");
    return x_hat;
  }
  const double phi = x_hat.angle();
  const double chi = mollifier_.value(rho, nominal_(phi));
  if (chi == 0.0) return x_hat;
  const double scale = 1.0 + chi * radius_perturbation(sequence_, y, phi) / rho;
  return {x_hat.x * scale, x_hat.y * scale};
}

JacobianResult DomainMap::jacobian(const ParamVector& y, Point2 x_hat) const {
  const double rho = x_hat.norm();
  JacobianResult out;
  if (rho == 0.0) return out;  // identity near the origin

  const double phi = x_hat.angle();
  const double r0 = nominal_(phi);
  for (double kink : {mollifier_.inner_cutoff, r0, mollifier_.outer_cutoff}) {
    if (std::abs(rho - kink) <= kKinkTolerance)
      throw Error(ErrorCode::NonSmoothPoint, "jacobian requested on a mollifier kink circle");
  }

  const double chi = mollifier_.value(rho, r0);
  const double chi_rho = mollifier_.slope(rho, r0);
  const double chi_phi = mollifier_.interface_sensitivity(rho, r0) * nominal_.derivative(phi);
  if (chi == 0.0 && chi_rho == 0.0 && chi_phi == 0.0) return out;

  const double delta = radius_perturbation(sequence_, y, phi);
  const double delta_phi = radius_perturbation_derivative(sequence_, y, phi);

  // Polar form (rho, phi) -> (R, phi); chain through Cartesian coordinates.
  const double big_r = rho + chi * delta;
  const double r_rho = 1.0 + chi_rho * delta;
  const double r_phi = chi_phi * delta + chi * delta_phi;
  const double c = std::cos(phi), s = std::sin(phi);

  const Mat2 polar_to_cart{r_rho * c, r_phi * c - big_r * s, r_rho * s, r_phi * s + big_r * c};
  const Mat2 cart_to_polar{c, s, -s / rho, c / rho};
  out.matrix = polar_to_cart * cart_to_polar;
  const auto sv = singular_values(out.matrix);
  out.sigma_max = sv[0];
  out.sigma_min = sv[1];
  return out;
}

TransformedCoefficients DomainMap::transformed_coefficients(const ParamVector& y, Point2 x_hat,
                                                            const Materials& materials) const {
  if (!(materials.alpha2 > 0.0 && materials.kappa1 > 0.0 && materials.kappa2 > 0.0))
    throw Error(ErrorCode::InvalidGeometry, "alpha2, kappa1, kappa2 must be positive");
  const Mat2 d = jacobian(y, x_hat).matrix;
  const double det = d.det();
  if (std::abs(det) < 1e-14) throw Error(ErrorCode::DegenerateMap, "Jacobian is singular");

  const bool inside = x_hat.norm() < nominal_(x_hat.angle());
  const double alpha = inside ? materials.alpha2 : 1.0;
  const double kappa2 = inside ? materials.alpha2 * materials.kappa2 * materials.kappa2
                               : materials.kappa1 * materials.kappa1;

  const Mat2 dinv = d.inverse();
  TransformedCoefficients tc;
  tc.alpha_hat = dinv * dinv.transpose() * (det * alpha);
  // Symmetrize away the last-bit asymmetry of the product.
  const double off = 0.5 * (tc.alpha_hat.a01 + tc.alpha_hat.a10);
  tc.alpha_hat.a01 = tc.alpha_hat.a10 = off;
  tc.kappa2_hat = det * kappa2;
  return tc;
}

Point2 DomainMap::inverse_map_point(const ParamVector& y, Point2 x) const {
  const double target = x.norm();
  if (target == 0.0) return x;
  const double phi = x.angle();
  const double outer = mollifier_.outer_cutoff;
  if (target > outer)
    throw Error(ErrorCode::OutsideMappedRegion, "point lies outside the mapped region");

  const double delta = radius_perturbation(sequence_, y, phi);
  const double r0 = nominal_(phi);
  auto residual = [&](double rho) { return rho + mollifier_.value(rho, r0) * delta - target; };

  double lo = 0.0, hi = outer;
  if (residual(hi) < 0.0)
    throw Error(ErrorCode::OutsideMappedRegion, "no preimage along the ray");
  const double tol = 1e-13 * nominal_.infimum();
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double scale = 0.5 * (lo + hi) / target;
  return {x.x * scale, x.y * scale};
}

double DomainMap::interface_signed_gap(const ParamVector& y, Point2 x0) const {
  return radius(sequence_, nominal_, y, x0.angle()) - x0.norm();
}

}  // namespace mlmcuq
