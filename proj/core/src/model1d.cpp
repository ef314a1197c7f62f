#include "mlmcuq/model1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlmcuq/error.hpp"
#include "mlmcuq/quadrature.hpp"

namespace mlmcuq {

namespace {

constexpr double kNodeReuseTolerance = 1e-12;
constexpr double kSliverFraction = 1e-3;

std::size_t coarse_cells(const Transmission1D& p) {
  return static_cast<std::size_t>(std::llround(1.0 / p.h0));
}

// Fills `nodes` with the fitted mesh of `level` and returns the index of the
// interface node.
std::size_t fill_mesh(const Transmission1D& p, int level, double xi, std::vector<double>& nodes) {
  const std::size_t cells = coarse_cells(p) << level;
  const double n = static_cast<double>(cells);
  const auto nearest = static_cast<std::size_t>(std::llround(xi * n));
  const double gap = std::abs(static_cast<double>(nearest) / n - xi);
  const double h = 1.0 / n;
  if (gap <= kNodeReuseTolerance || (gap < kSliverFraction * h && nearest > 0 && nearest < cells)) {
    nodes.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) nodes[i] = static_cast<double>(i) * h;
    if (gap > kNodeReuseTolerance) nodes[nearest] = xi;
    return nearest;
  }
  const std::size_t right = static_cast<std::size_t>(std::floor(xi * n)) + 1;
  nodes.resize(cells + 2);
  for (std::size_t i = 0; i < right; ++i) nodes[i] = static_cast<double>(i) * h;
  nodes[right] = xi;
  for (std::size_t i = right; i <= cells; ++i) nodes[i + 1] = static_cast<double>(i) * h;
  return right;
}

struct Workspace {
  std::vector<double> nodes, lower, diag, upper, rhs, values;
  // Row i: diag_i = coupling_left_i + coupling_right_i + excess_i, where the
  // couplings are the magnitudes of the off-diagonal entries (boundary ones
  // included) and excess_i = -3 (mass_left + mass_right).
  std::vector<double> left, right, excess;
};

void assemble_into(const Transmission1D& p, const std::vector<double>& nodes, std::size_t iface,
                   Workspace& ws) {
  const std::size_t last = nodes.size() - 1;
  const std::size_t m = last - 1;  // interior unknowns; node i + 1 is unknown i
  ws.lower.resize(m);
  ws.diag.resize(m);
  ws.upper.resize(m);
  ws.left.resize(m);
  ws.right.resize(m);
  ws.excess.assign(m, 0.0);
  ws.rhs.assign(m, 0.0);
  ws.lower[0] = 0.0;
  ws.upper[m - 1] = 0.0;
  double prev_dd = 0.0;
  for (std::size_t e = 0; e < last; ++e) {
    const bool left = e < iface;
    const double alpha = left ? p.alpha_left : p.alpha_right;
    const double kappa2 = left ? p.kappa2_left : p.kappa2_right;
    const double len = nodes[e + 1] - nodes[e];
    const double k = alpha / len;
    const double mass = kappa2 * len / 6.0;
    const double dd = k - 2.0 * mass;
    const double od = -k - mass;
    if (e == 0) {
      ws.rhs[0] = -od;  // Dirichlet u(0) = 1
    } else {
      ws.diag[e - 1] = prev_dd + dd;
      ws.right[e - 1] = -od;
      ws.excess[e - 1] -= 3.0 * mass;
      if (e < m) ws.upper[e - 1] = od;
    }
    if (e < m) {
      ws.left[e] = -od;
      ws.excess[e] -= 3.0 * mass;
      if (e > 0) ws.lower[e] = od;
    }
    prev_dd = dd;
  }
}

// Tridiagonal elimination carried on the pivot excesses e_i = p_i - right_i,
// which avoids the cancellation diag - lower * upper / pivot: for kappa = 0
// every quantity stays a sum of positive terms.
void thomas_solve(Workspace& ws) {
  const std::size_t m = ws.diag.size();
  std::vector<double>& d = ws.rhs;
  std::vector<double>& pivot = ws.diag;  // overwritten
  double e = ws.left[0] + ws.excess[0];
  pivot[0] = ws.right[0] + e;
  for (std::size_t i = 1; i < m; ++i) {
    const double ratio = ws.left[i] / pivot[i - 1];
    e = ws.excess[i] + ratio * e;
    pivot[i] = ws.right[i] + e;
    d[i] += ratio * d[i - 1];
  }
  ws.values.resize(m + 2);
  ws.values[0] = 1.0;
  ws.values[m + 1] = 0.0;
  ws.values[m] = d[m - 1] / pivot[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) ws.values[i + 1] = (d[i] + ws.right[i] * ws.values[i + 2]) / pivot[i];
}

double interpolate(const std::vector<double>& nodes, const std::vector<double>& values, double x) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t right = static_cast<std::size_t>(it - nodes.begin());
  if (right == 0) right = 1;
  if (right >= nodes.size()) right = nodes.size() - 1;
  const std::size_t left = right - 1;
  const double t = (x - nodes[left]) / (nodes[right] - nodes[left]);
  return values[left] + t * (values[right] - values[left]);
}

void check_points(std::span<const double> points) {
  if (points.empty()) throw Error(ErrorCode::PointOutOfDomain, "no evaluation points");
  for (double x : points)
    if (!(x > 0.0 && x < 1.0)) throw Error(ErrorCode::PointOutOfDomain, "point outside (0, 1)");
}

}  // namespace

double Transmission1D::interface(const ParamVector& y) const {
  if (y.dim() > interface_betas.size())
    throw Error(ErrorCode::InvalidParameter, "parameter dimension exceeds number of coefficients");
  double xi = interface_base;
  for (std::size_t j = 0; j < y.dim(); ++j) xi += interface_betas[j] * y[j];
  return xi;
}

double Transmission1D::interface_min() const noexcept {
  double s = 0.0;
  for (double b : interface_betas) s += std::abs(b);
  return interface_base - s;
}

double Transmission1D::interface_max() const noexcept {
  double s = 0.0;
  for (double b : interface_betas) s += std::abs(b);
  return interface_base + s;
}

bool Transmission1D::coercive() const noexcept {
  return std::max(kappa2_left, kappa2_right) <=
         tau * std::numbers::pi * std::numbers::pi * std::min(alpha_left, alpha_right);
}

void Transmission1D::validate() const {
  if (!(alpha_left > 0.0 && alpha_right > 0.0))
    throw Error(ErrorCode::InvalidProblem, "diffusion coefficients must be positive");
  if (!(kappa2_left >= 0.0 && kappa2_right >= 0.0))
    throw Error(ErrorCode::InvalidProblem, "squared wavenumbers must be nonnegative");
  if (!(margin > 0.0 && margin < 0.5)) throw Error(ErrorCode::InvalidProblem, "margin must lie in (0, 1/2)");
  if (!(interface_min() > margin && interface_max() < 1.0 - margin))
    throw Error(ErrorCode::InvalidProblem, "interface range leaves (margin, 1 - margin)");
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidProblem, "tau must lie in (0, 1)");
  const double inv = 1.0 / h0;
  if (!(h0 > 0.0 && h0 <= 1.0) || std::abs(inv - std::round(inv)) > 1e-9)
    throw Error(ErrorCode::InvalidProblem, "1/h0 must be a positive integer");
}

ExactSolution1D::ExactSolution1D(const Transmission1D& p, double xi)
    : xi_(xi),
      alpha_l_(p.alpha_left),
      alpha_r_(p.alpha_right),
      omega_l_(std::sqrt(p.kappa2_left / p.alpha_left)),
      omega_r_(std::sqrt(p.kappa2_right / p.alpha_right)) {
  if (p.kappa2_left == 0.0 && p.kappa2_right == 0.0) {
    // Piecewise-linear closed form.
    const double den = alpha_l_ * (1.0 - xi) + alpha_r_ * xi;
    c_ = -alpha_r_ / den;
    d_ = alpha_l_ / den;
    closed_form_ = true;
    return;
  }
  // Unknowns (c, d): continuity and flux continuity at xi.
  const double s = 1.0 - xi;
  const double b = basis_b(xi);
  const double bp = omega_l_ > 0.0 ? omega_l_ * std::cos(omega_l_ * xi) : 1.0;
  const double a = basis_a(xi);
  const double ap = omega_l_ > 0.0 ? -omega_l_ * std::sin(omega_l_ * xi) : 0.0;
  const double sr = right_shape(s);
  const double srp = omega_r_ > 0.0 ? omega_r_ * std::cos(omega_r_ * s) : 1.0;

  const double m00 = b, m01 = -sr;
  const double m10 = alpha_l_ * bp, m11 = alpha_r_ * srp;
  const double r0 = -a, r1 = -alpha_l_ * ap;
  const double det = m00 * m11 - m01 * m10;
  if (std::abs(det) < 1e-12)
    throw Error(ErrorCode::NearResonance, "interface matching system is singular");
  c_ = (r0 * m11 - m01 * r1) / det;
  d_ = (m00 * r1 - r0 * m10) / det;
}

double ExactSolution1D::basis_a(double x) const noexcept {
  return omega_l_ > 0.0 ? std::cos(omega_l_ * x) : 1.0;
}

double ExactSolution1D::basis_b(double x) const noexcept {
  return omega_l_ > 0.0 ? std::sin(omega_l_ * x) : x;
}

double ExactSolution1D::right_shape(double s) const noexcept {
  return omega_r_ > 0.0 ? std::sin(omega_r_ * s) : s;
}

double ExactSolution1D::value(double x) const noexcept {
  if (closed_form_) return x < xi_ ? c_ * x + 1.0 : d_ * (1.0 - x);
  if (x < xi_) return basis_a(x) + c_ * basis_b(x);
  return d_ * right_shape(1.0 - x);
}

double ExactSolution1D::derivative(double x, bool left) const noexcept {
  const bool on_left = x < xi_ || (x == xi_ && left);
  if (on_left) {
    if (omega_l_ == 0.0) return c_;
    return -omega_l_ * std::sin(omega_l_ * x) + c_ * omega_l_ * std::cos(omega_l_ * x);
  }
  const double s = 1.0 - x;
  const double sp = omega_r_ > 0.0 ? omega_r_ * std::cos(omega_r_ * s) : 1.0;
  return -d_ * sp;
}

double exact_solution(const Transmission1D& problem, const ParamVector& y, double x) {
  return ExactSolution1D(problem, problem.interface(y)).value(x);
}

std::vector<double> Mesh1D::background_nodes() const {
  std::vector<double> out(background_cells + 1);
  for (std::size_t i = 0; i <= background_cells; ++i)
    out[i] = static_cast<double>(i) / static_cast<double>(background_cells);
  return out;
}

Mesh1D build_mesh(const Transmission1D& problem, int level, double xi) {
  if (level < 0) throw Error(ErrorCode::InvalidArgument, "level must be nonnegative");
  Mesh1D mesh;
  mesh.level = level;
  mesh.background_cells = coarse_cells(problem) << level;
  mesh.h = 1.0 / static_cast<double>(mesh.background_cells);
  mesh.interface_index = fill_mesh(problem, level, xi, mesh.nodes);
  return mesh;
}

Mesh1D build_mesh(const Transmission1D& problem, int level, const ParamVector& y) {
  return build_mesh(problem, level, problem.interface(y));
}

TridiagonalSystem assemble_system(const Transmission1D& problem, const Mesh1D& mesh) {
  Workspace ws;
  assemble_into(problem, mesh.nodes, mesh.interface_index, ws);
  return {std::move(ws.lower), std::move(ws.diag), std::move(ws.upper), std::move(ws.rhs)};
}

Solution1D fem_solve(const Transmission1D& problem, const ParamVector& y, int level) {
  if (!problem.coercive())
    throw Error(ErrorCode::IndefiniteForm, "coercivity guard violated: kappa^2 too large");
  Solution1D sol;
  sol.mesh = build_mesh(problem, level, y);
  Workspace ws;
  assemble_into(problem, sol.mesh.nodes, sol.mesh.interface_index, ws);
  thomas_solve(ws);
  sol.nodal_values = std::move(ws.values);
  return sol;
}

double Solution1D::evaluate(double x) const { return interpolate(mesh.nodes, nodal_values, x); }

void point_qoi_into(const Transmission1D& problem, const ParamVector& y, QoiLevel level,
                    std::span<const double> points, std::span<double> out) {
  check_points(points);
  if (out.size() < points.size()) throw Error(ErrorCode::InvalidArgument, "output span too short");
  const double xi = problem.interface(y);
  if (level.exact) {
    const ExactSolution1D exact(problem, xi);
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = exact.value(points[i]);
    return;
  }
  if (!problem.coercive())
    throw Error(ErrorCode::IndefiniteForm, "coercivity guard violated: kappa^2 too large");
  if (level.level < 0) throw Error(ErrorCode::InvalidArgument, "level must be nonnegative");
  thread_local Workspace ws;
  const std::size_t iface = fill_mesh(problem, level.level, xi, ws.nodes);
  assemble_into(problem, ws.nodes, iface, ws);
  thomas_solve(ws);
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = interpolate(ws.nodes, ws.values, points[i]);
}

std::vector<double> point_qoi(const Transmission1D& problem, const ParamVector& y, QoiLevel level,
                              std::span<const double> points) {
  std::vector<double> out(points.size());
  point_qoi_into(problem, y, level, points, out);
  return out;
}

std::size_t dofs_at_level(const Transmission1D& problem, int level) {
  return (coarse_cells(problem) << level) + 2;
}

namespace {

double sinc(double z) noexcept { return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z; }

}  // namespace

ReferenceMean exact_mean(const Transmission1D& problem, std::span<const double> points) {
  check_points(points);
  std::vector<double> active;
  for (double b : problem.interface_betas)
    if (b != 0.0) active.push_back(std::abs(b));
  std::sort(active.begin(), active.end(), std::greater<>());

  ReferenceMean out;
  out.values.assign(points.size(), 0.0);
  const double xi0 = problem.interface_base;
  if (active.empty()) {
    const ExactSolution1D exact(problem, xi0);
    for (std::size_t i = 0; i < points.size(); ++i) out.values[i] = exact.value(points[i]);
    return out;
  }

  double spread = 0.0;
  for (double b : active) spread += b;
  const double lo = xi0 - spread, hi = xi0 + spread;

  // Breakpoints: support ends, the kinks of each point evaluation, and the
  // corners of the trapezoidal density for two active terms.
  std::vector<double> breaks{lo, hi};
  for (double x : points)
    if (x > lo && x < hi) breaks.push_back(x);
  if (active.size() == 2) {
    const double d = active[0] - active[1];
    if (d > 0.0) {
      breaks.push_back(xi0 - d);
      breaks.push_back(xi0 + d);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<double> t_nodes, t_weights;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const QuadratureRule r = composite_gauss(breaks[s], breaks[s + 1], 24, 20);
    t_nodes.insert(t_nodes.end(), r.nodes.begin(), r.nodes.end());
    t_weights.insert(t_weights.end(), r.weights.begin(), r.weights.end());
  }

  std::vector<double> density(t_nodes.size());
  if (active.size() == 1) {
    std::fill(density.begin(), density.end(), 0.5 / active[0]);
  } else if (active.size() == 2) {
    const double b1 = active[0], b2 = active[1];
    for (std::size_t k = 0; k < t_nodes.size(); ++k) {
      const double s = std::abs(t_nodes[k] - xi0);
      density[k] = s <= b1 - b2 ? 0.5 / b1 : (b1 + b2 - s) / (4.0 * b1 * b2);
    }
  } else {
    // Characteristic function prod_j sinc(beta_j w); its magnitude is bounded
    // by prod_j min(1, 1/(beta_j w)).
    auto envelope = [&](double w) {
      double e = 1.0;
      for (double b : active) e *= std::min(1.0, 1.0 / (b * w));
      return e;
    };
    double omega = 1.0 / active.front();
    while (envelope(omega) * omega > 1e-17 && omega < 2e6) omega *= 1.25;
    out.truncation_bound = envelope(omega) * omega / std::numbers::pi;

    const double max_freq = 2.0 * spread;
    const double panel = std::numbers::pi / max_freq;
    const auto panels = static_cast<std::size_t>(std::ceil(omega / panel));
    const QuadratureRule w_rule = composite_gauss(0.0, panel * panels, panels, 20);
    std::vector<double> cf(w_rule.nodes.size());
    for (std::size_t q = 0; q < cf.size(); ++q) {
      double v = w_rule.weights[q] / std::numbers::pi;
      for (double b : active) v *= sinc(b * w_rule.nodes[q]);
      cf[q] = v;
    }
    for (std::size_t k = 0; k < t_nodes.size(); ++k) {
      const double s = t_nodes[k] - xi0;
      double f = 0.0;
      for (std::size_t q = 0; q < cf.size(); ++q) f += cf[q] * std::cos(w_rule.nodes[q] * s);
      density[k] = f;
    }
  }

  for (std::size_t k = 0; k < t_nodes.size(); ++k) {
    const ExactSolution1D exact(problem, t_nodes[k]);
    const double w = t_weights[k] * density[k];
    for (std::size_t i = 0; i < points.size(); ++i) out.values[i] += w * exact.value(points[i]);
  }
  return out;
}

std::vector<double> exact_mean_mc(const Transmission1D& problem, std::span<const double> points,
                                  std::size_t samples, std::uint64_t seed) {
  check_points(points);
  std::vector<double> sum(points.size(), 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const ParamVector y =
        sample(seed, StreamKey{0, 0, static_cast<std::uint32_t>(i), 7}, problem.dim());
    const ExactSolution1D exact(problem, problem.interface(y));
    for (std::size_t k = 0; k < points.size(); ++k) sum[k] += exact.value(points[k]);
  }
  for (double& s : sum) s /= static_cast<double>(samples);
  return sum;
}

}  // namespace mlmcuq
