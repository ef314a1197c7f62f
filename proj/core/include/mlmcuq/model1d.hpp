#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlmcuq/param_space.hpp"

namespace mlmcuq {

/// -(alpha u')' - kappa^2 u = 0 on (0, 1), u(0) = 1, u(1) = 0, with
/// piecewise-constant coefficients jumping at the random interface
/// xi(y) = interface_base + sum_j interface_betas[j] * y_j.
struct Transmission1D {
  double alpha_left = 3.0;
  double alpha_right = 1.0;
  double kappa2_left = 0.0;
  double kappa2_right = 0.0;
  double interface_base = 0.5;
  std::vector<double> interface_betas;
  /// Interface must stay inside (margin, 1 - margin).
  double margin = 0.01;
  /// Coercivity margin: max kappa^2 <= tau * pi^2 * min alpha, tau < 1.
  double tau = 0.9;
  /// Coarsest mesh width; 1/h0 must be an integer.
  double h0 = 1.0 / 8.0;

  std::size_t dim() const noexcept { return interface_betas.size(); }
  double interface(const ParamVector& y) const;
  double interface_min() const noexcept;
  double interface_max() const noexcept;
  bool coercive() const noexcept;
  /// Throws InvalidProblem when a structural invariant is violated.
  void validate() const;
};

struct Mesh1D {
  int level = 0;
  double h = 0.0;
  std::size_t background_cells = 0;
  std::vector<double> nodes;
  std::size_t interface_index = 0;

  double interface_node() const { return nodes[interface_index]; }
  /// Uniform background grid of this level (before interface insertion).
  std::vector<double> background_nodes() const;
};

struct Solution1D {
  Mesh1D mesh;
  std::vector<double> nodal_values;

  /// Piecewise-linear interpolant; x must lie in [0, 1].
  double evaluate(double x) const;
};

/// Closed-form solution for a fixed interface position.
class ExactSolution1D {
 public:
  /// Throws NearResonance if the interface matching system is singular.
  ExactSolution1D(const Transmission1D& problem, double xi);

  double xi() const noexcept { return xi_; }
  double value(double x) const noexcept;
  /// One-sided derivative; `left` selects the branch at x == xi.
  double derivative(double x, bool left) const noexcept;

 private:
  double basis_a(double x) const noexcept;
  double basis_b(double x) const noexcept;
  double right_shape(double s) const noexcept;

  double xi_;
  double alpha_l_, alpha_r_;
  double omega_l_, omega_r_;
  double c_ = 0.0, d_ = 0.0;
  bool closed_form_ = false;
};

double exact_solution(const Transmission1D& problem, const ParamVector& y, double x);

Mesh1D build_mesh(const Transmission1D& problem, int level, double xi);
Mesh1D build_mesh(const Transmission1D& problem, int level, const ParamVector& y);

/// Tridiagonal Galerkin system for the interior unknowns.
struct TridiagonalSystem {
  std::vector<double> lower, diag, upper, rhs;
};

TridiagonalSystem assemble_system(const Transmission1D& problem, const Mesh1D& mesh);

/// Piecewise-linear Galerkin solution on the fitted mesh. Throws IndefiniteForm
/// when the coercivity guard fails.
Solution1D fem_solve(const Transmission1D& problem, const ParamVector& y, int level);

/// Level selector for point_qoi: a mesh level or the exact solution.
struct QoiLevel {
  int level = 0;
  bool exact = false;

  static QoiLevel fem(int l) { return {l, false}; }
  static QoiLevel exact_solution() { return {0, true}; }
};

/// Point values u(y; x_i). Throws PointOutOfDomain for points outside (0, 1).
std::vector<double> point_qoi(const Transmission1D& problem, const ParamVector& y, QoiLevel level,
                              std::span<const double> points);

/// Allocation-free variant of point_qoi writing into `out`.
void point_qoi_into(const Transmission1D& problem, const ParamVector& y, QoiLevel level,
                    std::span<const double> points, std::span<double> out);

/// Number of mesh nodes (dofs incl. boundary) at a level for a generic
/// interface position: background nodes + 1.
std::size_t dofs_at_level(const Transmission1D& problem, int level);

struct ReferenceMean {
  std::vector<double> values;
  /// Bound on the neglected characteristic-function tail, 0 for closed forms.
  double truncation_bound = 0.0;
};

/// E[u(y; x_i)] under the uniform measure, by one-dimensional quadrature
/// against the density of the interface position (closed form for up to two
/// active coefficients, Fourier inversion of the product of sinc factors
/// otherwise).
ReferenceMean exact_mean(const Transmission1D& problem, std::span<const double> points);

/// Plain Monte Carlo mean of the exact point values, M samples.
std::vector<double> exact_mean_mc(const Transmission1D& problem, std::span<const double> points,
                                  std::size_t samples, std::uint64_t seed);

}  // namespace mlmcuq
