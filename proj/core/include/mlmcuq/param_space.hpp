#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlmcuq/random.hpp"

namespace mlmcuq {

/// A point y of the parameter cube [-1, 1]^J.
class ParamVector {
 public:
  ParamVector() = default;
  /// Throws InvalidParameter if the list is empty or any entry leaves [-1, 1].
  explicit ParamVector(std::vector<double> entries);

  static ParamVector zeros(std::size_t dim) { return ParamVector(std::vector<double>(dim, 0.0)); }
  static ParamVector constant(std::size_t dim, double value) {
    return ParamVector(std::vector<double>(dim, value));
  }

  std::size_t dim() const noexcept { return entries_.size(); }
  double operator[](std::size_t j) const noexcept { return entries_[j]; }
  std::span<const double> entries() const noexcept { return entries_; }

 private:
  std::vector<double> entries_;
};

/// Decay sequence (beta_j) of the interface expansion with its claimed decay
/// exponent p and the infimum r0^- of the nominal radius.
struct CoefficientSequence {
  std::vector<double> betas;
  double decay_p = 1.0 / 3.0;
  double nominal_radius_min = 1.0;

  std::size_t size() const noexcept { return betas.size(); }
  double abs_sum() const noexcept;

  /// beta_{2j-1} = beta_{2j} = scale * j^{-decay_inv_p}, j = 1..pairs.
  static CoefficientSequence paired_power_law(double scale, double decay_inv_p, int pairs,
                                              double nominal_radius_min);
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_passed() const noexcept;
  const ValidationCheck* find(std::string_view name) const noexcept;
};

/// Runs the `sum_bound` and `majorant_decay` checks. Throws EmptySequence,
/// InvalidRadius or InvalidDecay on malformed input.
ValidationReport validate_sequence(const CoefficientSequence& seq);

/// Hoelder class (k, beta) of realizations of the radius for decay p.
struct SmoothnessClass {
  int k = 0;
  double beta_max = 1.0;
  bool beta_is_open = true;
};

SmoothnessClass smoothness_class(double p);

/// Angle-periodic nominal radius r0(phi) together with its derivative.
class NominalRadius {
 public:
  using Fn = std::function<double(double)>;

  NominalRadius(Fn value, Fn derivative, double infimum);
  static NominalRadius constant(double r0);

  double operator()(double phi) const { return value_(phi); }
  double derivative(double phi) const { return derivative_(phi); }
  double infimum() const noexcept { return infimum_; }
  bool is_constant() const noexcept { return constant_; }

 private:
  Fn value_;
  Fn derivative_;
  double infimum_;
  bool constant_ = false;
};

/// Fourier basis function psi_j (1-based): sin(((j+1)/2) phi) for odd j,
/// cos((j/2) phi) for even j.
double interface_basis(std::size_t j, double phi) noexcept;
double interface_basis_derivative(std::size_t j, double phi) noexcept;

/// Radial perturbation sum_j beta_j y_j psi_j(phi). Requires y.dim() <= betas.
double radius_perturbation(const CoefficientSequence& seq, const ParamVector& y, double phi);
double radius_perturbation_derivative(const CoefficientSequence& seq, const ParamVector& y,
                                      double phi);

/// r(y; phi) = r0(phi) + sum_j beta_j y_j psi_j(phi).
double radius(const CoefficientSequence& seq, const NominalRadius& nominal, const ParamVector& y,
              double phi);

/// Draws y with i.i.d. U(-1, 1) entries from the stream addressed by `key`.
/// Identical (seed, key, dim) always produce identical vectors.
ParamVector sample(std::uint64_t seed, StreamKey key, std::size_t dim);

/// Same as above, from an already positioned stream.
ParamVector sample(RandomStream& stream, std::size_t dim);

}  // namespace mlmcuq
