#include "mlmcuq/mie2d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlmcuq/bessel.hpp"
#include "mlmcuq/error.hpp"

namespace mlmcuq {

namespace {

constexpr double kResonanceDet = 1e-14;

// Signed-order value and derivative of a cylinder function family, from the
// nonnegative orders 0..N+1 held in v. Z_{-n} = (-1)^n Z_n.
struct OrderValue {
  double value;
  double derivative;
};

OrderValue signed_order(const std::vector<double>& v, int n, double x) {
  const int m = std::abs(n);
  const auto um = static_cast<std::size_t>(m);
  double val = v[um];
  double der = (m == 0) ? -v[1] : v[um - 1] - (m / x) * v[um];
  if (n < 0 && m % 2 == 1) {
    val = -val;
    der = -der;
  }
  return {val, der};
}

Complex i_pow(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

int MieScatterer::default_truncation(double kappa, double radius) {
  return static_cast<int>(std::ceil(kappa * radius)) + 15;
}

MieScatterer MieScatterer::make(double radius, double kappa1, double kappa2, double alpha2,
                                Point2 direction) {
  MieScatterer s;
  s.radius = radius;
  s.kappa1 = kappa1;
  s.kappa2 = kappa2;
  s.alpha2 = alpha2;
  s.direction = direction;
  s.truncation = default_truncation(std::max(kappa1, kappa2), radius);
  return s;
}

void MieScatterer::validate() const {
  if (!(radius > 0.0) || !(kappa1 > 0.0) || !(kappa2 > 0.0) || !(alpha2 > 0.0))
    throw Error(ErrorCode::InvalidScatterer, "radius, wavenumbers and alpha2 must be positive");
  const double dnorm = direction.norm();
  if (!(std::abs(dnorm - 1.0) < 1e-12))
    throw Error(ErrorCode::InvalidScatterer, "incident direction must be a unit vector");
  const int needed = static_cast<int>(std::ceil(kappa2 * radius)) + 10;
  if (truncation < needed)
    throw Error(ErrorCode::InvalidScatterer,
                "truncation " + std::to_string(truncation) + " below " + std::to_string(needed));
}

ExpansionCoefficients expansion_coefficients(const MieScatterer& s) {
  s.validate();
  const int big_n = s.truncation;
  const double x1 = s.kappa1 * s.radius;
  const double x2 = s.kappa2 * s.radius;
  const CylinderFunctions out = cylinder_functions(big_n + 1, x1);
  const std::vector<double> in = bessel_j_sequence(big_n + 1, x2);
  const double theta_d = s.direction.angle();

  ExpansionCoefficients c;
  c.truncation = big_n;
  const auto size = static_cast<std::size_t>(2 * big_n + 1);
  c.incident.resize(size);
  c.interior.resize(size);
  c.scattered.resize(size);
  for (int n = -big_n; n <= big_n; ++n) {
    const auto idx = static_cast<std::size_t>(n + big_n);
    const Complex cn = i_pow(n) * std::polar(1.0, -n * theta_d);
    const OrderValue j1 = signed_order(out.j, n, x1);
    const OrderValue y1 = signed_order(out.y, n, x1);
    const OrderValue j2 = signed_order(in, n, x2);
    const Complex h{j1.value, y1.value};
    const Complex dh{j1.derivative, y1.derivative};

    // [ J_n(k2 R)           -H_n(k1 R)      ] [a]   [ c J_n(k1 R)      ]
    // [ a2 k2 J_n'(k2 R)    -k1 H_n'(k1 R)  ] [b] = [ c k1 J_n'(k1 R)  ]
    const Complex m00 = j2.value;
    const Complex m01 = -h;
    const Complex m10 = s.alpha2 * s.kappa2 * j2.derivative;
    const Complex m11 = -s.kappa1 * dh;
    const Complex r0 = cn * j1.value;
    const Complex r1 = cn * s.kappa1 * j1.derivative;
    const Complex det = m00 * m11 - m01 * m10;
    if (std::abs(det) < kResonanceDet)
      throw Error(ErrorCode::ModeResonance, "mode " + std::to_string(n) + " is resonant");
    c.incident[idx] = cn;
    c.interior[idx] = (r0 * m11 - m01 * r1) / det;
    c.scattered[idx] = (m00 * r1 - m10 * r0) / det;
  }
  return c;
}

namespace {

bool use_interior(const MieScatterer& s, double r, FieldBranch branch) {
  if (branch == FieldBranch::Interior) return true;
  if (branch == FieldBranch::Exterior) return false;
  return r < s.radius;
}

}  // namespace

Complex field_at(const MieScatterer& s, const ExpansionCoefficients& coeffs, Point2 x,
                 FieldBranch branch) {
  const double r = x.norm();
  const double phi = r > 0.0 ? x.angle() : 0.0;
  const int big_n = coeffs.truncation;
  Complex sum{0.0, 0.0};
  if (use_interior(s, r, branch)) {
    const std::vector<double> j = bessel_j_sequence(big_n + 1, s.kappa2 * r);
    for (int n = -big_n; n <= big_n; ++n)
      sum += coeffs.a(n) * signed_order(j, n, 1.0).value * std::polar(1.0, n * phi);
    return sum;
  }
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "exterior series undefined at the origin");
  // The incident plane wave is summed in closed form, only the scattered
  // field as a series.
  const CylinderFunctions f = cylinder_functions(big_n + 1, s.kappa1 * r);
  for (int n = -big_n; n <= big_n; ++n) {
    const double jn = signed_order(f.j, n, 1.0).value;
    const double yn = signed_order(f.y, n, 1.0).value;
    sum += coeffs.b(n) * Complex{jn, yn} * std::polar(1.0, n * phi);
  }
  return sum + std::polar(1.0, s.kappa1 * (s.direction.x * x.x + s.direction.y * x.y));
}

Complex radial_derivative_at(const MieScatterer& s, const ExpansionCoefficients& coeffs, Point2 x,
                             FieldBranch branch) {
  const double r = x.norm();
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radial derivative undefined at the origin");
  const double phi = x.angle();
  const int big_n = coeffs.truncation;
  Complex sum{0.0, 0.0};
  if (use_interior(s, r, branch)) {
    const double arg = s.kappa2 * r;
    const std::vector<double> j = bessel_j_sequence(big_n + 1, arg);
    for (int n = -big_n; n <= big_n; ++n)
      sum += coeffs.a(n) * s.kappa2 * signed_order(j, n, arg).derivative * std::polar(1.0, n * phi);
    return sum;
  }
  const double arg = s.kappa1 * r;
  const CylinderFunctions f = cylinder_functions(big_n + 1, arg);
  for (int n = -big_n; n <= big_n; ++n) {
    const double dj = signed_order(f.j, n, arg).derivative;
    const double dy = signed_order(f.y, n, arg).derivative;
    sum += s.kappa1 * coeffs.b(n) * Complex{dj, dy} * std::polar(1.0, n * phi);
  }
  const double d_radial = (s.direction.x * x.x + s.direction.y * x.y) / r;
  const Complex incident = std::polar(1.0, s.kappa1 * d_radial * r);
  return sum + Complex{0.0, s.kappa1 * d_radial} * incident;
}

void MieFamily::validate() const {
  if (!(r0 > 0.0) || !(kappa1 > 0.0) || !(kappa2 > 0.0) || !(alpha2 > 0.0))
    throw Error(ErrorCode::InvalidScatterer, "family data must be positive");
  if (!(std::abs(c) < 1.0)) throw Error(ErrorCode::InvalidScatterer, "radius spread needs |c| < 1");
}

MieScatterer MieFamily::at(const ParamVector& y) const {
  validate();
  const double rho = r0 * (1.0 + c * y[0]);
  return MieScatterer::make(rho, kappa1, kappa2, alpha2, direction);
}

std::vector<double> radial_qoi(const MieFamily& family, const ParamVector& y,
                               std::span<const Point2> points) {
  const MieScatterer s = family.at(y);
  const ExpansionCoefficients coeffs = expansion_coefficients(s);
  std::vector<double> out;
  out.reserve(points.size());
  for (const Point2& p : points) out.push_back(field_at(s, coeffs, p).real());
  return out;
}

}  // namespace mlmcuq
