#include "mlmcuq/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlmcuq/error.hpp"
#include "mlmcuq/regression.hpp"

namespace mlmcuq {

ParamVector::ParamVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::InvalidParameter, "parameter vector must have J >= 1");
  for (double v : entries_) {
    if (!(v >= -1.0 && v <= 1.0))
      throw Error(ErrorCode::InvalidParameter, "parameter entry outside [-1, 1]");
  }
}

double CoefficientSequence::abs_sum() const noexcept {
  double s = 0.0;
  for (double b : betas) s += std::abs(b);
  return s;
}

CoefficientSequence CoefficientSequence::paired_power_law(double scale, double decay_inv_p,
                                                          int pairs, double nominal_radius_min) {
  if (pairs < 1) throw Error(ErrorCode::EmptySequence, "pairs must be >= 1");
  if (!(decay_inv_p > 0.0)) throw Error(ErrorCode::InvalidDecay, "decay_inv_p must be positive");
  CoefficientSequence seq;
  seq.decay_p = 1.0 / decay_inv_p;
  seq.nominal_radius_min = nominal_radius_min;
  seq.betas.reserve(2 * static_cast<std::size_t>(pairs));
  for (int j = 1; j <= pairs; ++j) {
    const double b = scale * std::pow(static_cast<double>(j), -decay_inv_p);
    seq.betas.push_back(b);
    seq.betas.push_back(b);
  }
  return seq;
}

bool ValidationReport::all_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const noexcept {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

constexpr double kMajorantSlopeTolerance = 0.25;

// Fits the decay exponent of the running tail maximum, using only the right
// end of each plateau. Pairwise-equal sequences then yield the exact exponent
// instead of a flattened one.
ValidationCheck majorant_check(const CoefficientSequence& seq) {
  const std::size_t n = seq.size();
  std::vector<double> tail_max(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    running = std::max(running, std::abs(seq.betas[i]));
    tail_max[i] = running;
  }
  std::vector<double> idx, val;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = i + 1 < n ? tail_max[i + 1] : 0.0;
    if (tail_max[i] > 0.0 && tail_max[i] > next) {
      idx.push_back(static_cast<double>(i + 1));
      val.push_back(tail_max[i]);
    }
  }

  ValidationCheck check;
  check.name = "majorant_decay";
  check.threshold = -1.0 / seq.decay_p + kMajorantSlopeTolerance;
  if (idx.size() < 2) {
    // Nothing to fit: a zero or single-step sequence trivially has a
    // summable majorant.
    check.measured = -std::numeric_limits<double>::infinity();
    check.passed = true;
    return check;
  }
  check.measured = fit_loglog(idx, val).slope;
  check.passed = check.measured <= check.threshold;
  return check;
}

}  // namespace

ValidationReport validate_sequence(const CoefficientSequence& seq) {
  if (seq.betas.empty()) throw Error(ErrorCode::EmptySequence, "coefficient sequence is empty");
  if (!(seq.nominal_radius_min > 0.0))
    throw Error(ErrorCode::InvalidRadius, "nominal_radius_min must be positive");
  if (!(seq.decay_p > 0.0 && seq.decay_p < 0.5))
    throw Error(ErrorCode::InvalidDecay, "decay_p must lie in (0, 1/2)");
  for (double b : seq.betas) {
    if (!std::isfinite(b) || b < 0.0)
      throw Error(ErrorCode::InvalidParameter, "betas must be finite and nonnegative");
  }

  ValidationReport report;
  ValidationCheck sum;
  sum.name = "sum_bound";
  sum.measured = seq.abs_sum();
  sum.threshold = 0.5 * seq.nominal_radius_min;
  sum.passed = sum.measured <= sum.threshold * (1.0 + 1e-12);
  report.checks.push_back(sum);
  report.checks.push_back(majorant_check(seq));
  return report;
}

SmoothnessClass smoothness_class(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidDecay, "p must lie in (0, 1)");
  const double x = 1.0 / p - 1.0;
  const double nearest = std::round(x);
  SmoothnessClass cls;
  if (std::abs(x - nearest) <= 1e-12) {
    cls.k = static_cast<int>(nearest) - 1;
    cls.beta_max = 1.0;
  } else {
    cls.k = static_cast<int>(std::floor(x));
    cls.beta_max = x - cls.k;
  }
  cls.beta_is_open = true;
  return cls;
}

NominalRadius::NominalRadius(Fn value, Fn derivative, double infimum)
    : value_(std::move(value)), derivative_(std::move(derivative)), infimum_(infimum) {
  if (!(infimum_ > 0.0)) throw Error(ErrorCode::InvalidRadius, "nominal radius infimum must be positive");
}

NominalRadius NominalRadius::constant(double r0) {
  NominalRadius nr([r0](double) { return r0; }, [](double) { return 0.0; }, r0);
  nr.constant_ = true;
  return nr;
}

double interface_basis(std::size_t j, double phi) noexcept {
  if (j % 2 == 1) return std::sin(0.5 * static_cast<double>(j + 1) * phi);
  return std::cos(0.5 * static_cast<double>(j) * phi);
}

double interface_basis_derivative(std::size_t j, double phi) noexcept {
  if (j % 2 == 1) {
    const double f = 0.5 * static_cast<double>(j + 1);
    return f * std::cos(f * phi);
  }
  const double f = 0.5 * static_cast<double>(j);
  return -f * std::sin(f * phi);
}

double radius_perturbation(const CoefficientSequence& seq, const ParamVector& y, double phi) {
  if (y.dim() > seq.size())
    throw Error(ErrorCode::InvalidParameter, "parameter dimension exceeds sequence length");
  double s = 0.0;
  for (std::size_t j = 0; j < y.dim(); ++j) s += seq.betas[j] * y[j] * interface_basis(j + 1, phi);
  return s;
}

double radius_perturbation_derivative(const CoefficientSequence& seq, const ParamVector& y,
                                      double phi) {
  if (y.dim() > seq.size())
    throw Error(ErrorCode::InvalidParameter, "parameter dimension exceeds sequence length");
  double s = 0.0;
  for (std::size_t j = 0; j < y.dim(); ++j)
    s += seq.betas[j] * y[j] * interface_basis_derivative(j + 1, phi);
  return s;
}

double radius(const CoefficientSequence& seq, const NominalRadius& nominal, const ParamVector& y,
              double phi) {
  return nominal(phi) + radius_perturbation(seq, y, phi);
}

ParamVector sample(RandomStream& stream, std::size_t dim) {
  std::vector<double> v(dim);
  stream.fill_symmetric(v.data(), v.size());
  return ParamVector(std::move(v));
}

ParamVector sample(std::uint64_t seed, StreamKey key, std::size_t dim) {
  RandomStream stream(seed, key);
  return sample(stream, dim);
}

}  // namespace mlmcuq
