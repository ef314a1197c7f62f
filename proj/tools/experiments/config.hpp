#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlmcuq/mie2d.hpp"
#include "mlmcuq/model1d.hpp"
#include "mlmcuq/param_space.hpp"

namespace mlmcuq::experiments {

/// Malformed or out-of-range configuration; `where` names the field or the
/// line/column of a syntax error.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Either explicit coefficients or the paired power law
/// beta_{2j-1} = beta_{2j} = scale * j^{-decay_inv_p}.
struct SequenceConfig {
  std::vector<double> values;
  double scale = 0.1;
  double decay_inv_p = 3.0;
  int pairs = 8;

  std::vector<double> betas() const;
};

struct Model1DConfig {
  double alpha_left = 3.0;
  double alpha_right = 1.0;
  double kappa2 = 4.0;
  double xi0 = 0.5;
  SequenceConfig betas;
  std::vector<double> points{0.5};
  double h0 = 0.125;
  double margin = 0.01;
  double tau = 0.9;

  Transmission1D problem() const;
};

struct EpsilonSweep {
  double max = 1e-2;
  double min = 1e-4;
  int count = 5;

  /// Log-spaced values from max down to min.
  std::vector<double> values() const;
};

struct EstimatorConfig {
  double epsilon = 1e-3;
  int max_level = 8;
  std::size_t pilot_samples = 1000;
  std::uint32_t repetitions = 10;
  std::optional<std::uint64_t> seed;
  bool per_dof = true;
  bool j_factor = true;
  /// Tolerances visited by the sweep experiments; {epsilon} when absent.
  std::optional<EpsilonSweep> epsilon_sweep;

  std::vector<double> epsilons() const {
    return epsilon_sweep ? epsilon_sweep->values() : std::vector<double>{epsilon};
  }
};

struct SparseQuadConfig {
  std::string qoi = "model1d-exact";
  std::vector<std::vector<double>> point_sets{{0.5}, {0.2}, {0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65}};
  std::size_t J = 16;
  std::size_t budget = 5000;
  double tolerance = 0.0;
  int fem_level = 6;
};

struct MieConfig {
  double r0 = 0.01;
  double kappa1 = 209.44;
  double kappa2 = 418.88;
  double alpha2 = 4.0;
  double c = 0.1;
  std::vector<Point2> points{{-0.01, 0.0}, {0.02, 0.0}};
  std::size_t samples = 401;

  MieFamily family() const;
};

struct KinkConfig {
  std::vector<double> points{0.2, 0.3, 0.5};
  std::size_t samples = 201;
  double xi_min = 0.25;
  double xi_max = 0.75;
};

struct FemRatesConfig {
  int max_level = 6;
  std::size_t draws = 100;
  std::vector<double> points{0.2, 0.3, 0.5, 0.7};
};

struct AllocationConfig {
  std::vector<double> dofs{581, 2250, 8855, 35133, 139961, 558705};
  /// One tolerance per row L; empty means eps_L = sqrt(2) h_L^t log(1/h_L)^s.
  std::vector<double> epsilons;
  double J = 16.0;
  int space_dim = 2;
  double t = 2.0;
  double log_power = 1.0;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"kink-profile",   "fem-rates-1d", "smolyak-degradation",
                                              "mlmc-error-work", "mc-vs-mlmc",   "allocation-table",
                                              "mie-probe"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  Model1DConfig model1d;
  EstimatorConfig estimators;
  SparseQuadConfig sparse_quad;
  MieConfig mie;
  KinkConfig kink;
  FemRatesConfig fem_rates;
  AllocationConfig allocation;

  std::uint64_t estimator_seed() const { return estimators.seed.value_or(seed); }
};

/// Parses and validates; throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved configuration, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace mlmcuq::experiments
