#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlmcuq/model1d.hpp"
#include "mlmcuq/param_space.hpp"
#include "mlmcuq/parallel.hpp"

namespace mlmcuq {

/// A hierarchy of quantity-of-interest evaluators Q_0, Q_1, ... on a common
/// parameter space.
class LevelEvaluator {
 public:
  virtual ~LevelEvaluator() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t qoi_size() const = 0;
  virtual int max_level() const = 0;
  /// Cost units of one evaluation of Q_level.
  virtual double work(int level) const = 0;
  /// Discretization parameter h_level.
  virtual double mesh_width(int level) const = 0;
  virtual void evaluate(int level, const ParamVector& y, std::span<double> out) const = 0;
};

/// Evaluator assembled from callables, mostly for tests and synthetic models.
class FunctionEvaluator final : public LevelEvaluator {
 public:
  using Eval = std::function<void(int, const ParamVector&, std::span<double>)>;

  FunctionEvaluator(std::size_t dim, std::size_t qoi_size, int max_level, Eval eval,
                    std::function<double(int)> work, double h0 = 1.0);

  std::size_t dim() const override { return dim_; }
  std::size_t qoi_size() const override { return qoi_size_; }
  int max_level() const override { return max_level_; }
  double work(int level) const override { return work_(level); }
  double mesh_width(int level) const override;
  void evaluate(int level, const ParamVector& y, std::span<double> out) const override {
    eval_(level, y, out);
  }

 private:
  std::size_t dim_, qoi_size_;
  int max_level_;
  Eval eval_;
  std::function<double(int)> work_;
  double h0_;
};

/// Point values of the 1D fitted-mesh FEM hierarchy. Work per sample is the
/// node count, times J when `j_factor` is set.
class Model1DEvaluator final : public LevelEvaluator {
 public:
  Model1DEvaluator(Transmission1D problem, std::vector<double> points, int max_level,
                   bool per_dof = true, bool j_factor = true);

  std::size_t dim() const override { return problem_.dim(); }
  std::size_t qoi_size() const override { return points_.size(); }
  int max_level() const override { return max_level_; }
  double work(int level) const override;
  double mesh_width(int level) const override;
  void evaluate(int level, const ParamVector& y, std::span<double> out) const override;

  const Transmission1D& problem() const noexcept { return problem_; }
  std::span<const double> points() const noexcept { return points_; }

 private:
  Transmission1D problem_;
  std::vector<double> points_;
  int max_level_;
  bool per_dof_, j_factor_;
};

/// Addresses the random streams of one estimator run: sample i of level l in
/// replicate r draws from the Philox stream (seed; l, r, i, tag).
struct SampleSource {
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
  std::uint32_t tag = 0;

  ParamVector draw(int level, std::uint64_t index, std::size_t dim) const;
};

/// Streaming statistics of Y_l = Q_l - Q_{l-1} (Q_{-1} = 0).
struct LevelStatistics {
  int level = 0;
  std::size_t samples = 0;
  std::vector<double> mean_diff;
  /// Sum over components of the unbiased sample variance.
  double var_diff = 0.0;
  double work_per_sample = 0.0;
  /// Per-component sums of squared deviations (Welford state).
  std::vector<double> m2;

  LevelStatistics() = default;
  LevelStatistics(int level, std::size_t qoi_size, double work_per_sample);

  void add(std::span<const double> y);
  double mean_norm() const;
  double cost() const { return static_cast<double>(samples) * work_per_sample; }
};

/// Draws samples [begin, end) of `level` and folds them into `stats` in index
/// order. Results do not depend on the number of workers.
void accumulate_level(const LevelEvaluator& model, const SampleSource& source, int level,
                      std::uint64_t begin, std::uint64_t end, LevelStatistics& stats,
                      const WorkerPool& pool = WorkerPool::serial());

struct McResult {
  std::vector<double> estimate;
  double variance = 0.0;
  double work = 0.0;
};

/// Plain Monte Carlo with M samples of Q_level. Throws TooFewSamples for M < 2.
McResult mc_estimate(const LevelEvaluator& model, const SampleSource& source, int level,
                     std::size_t samples, const WorkerPool& pool = WorkerPool::serial());

struct MlmcResult {
  std::vector<double> estimate;
  std::vector<LevelStatistics> per_level;
  double total_work = 0.0;
  /// |mean_diff_L| / (2^alpha - 1); NaN when L = 0.
  double bias_estimate = 0.0;
  double statistical_error_estimate = 0.0;
  double total_error_estimate() const;
};

/// MLMC estimate over levels 0..allocation.size()-1 with M_l fresh samples per
/// level. Throws TooFewSamples if any M_l < 2.
MlmcResult mlmc_estimate(const LevelEvaluator& model, const SampleSource& source,
                         std::span<const std::size_t> allocation, double bias_rate = 2.0,
                         const WorkerPool& pool = WorkerPool::serial());

/// Summarizes already accumulated level statistics.
MlmcResult mlmc_combine(std::vector<LevelStatistics> levels, double bias_rate);

struct RateEstimate {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double gamma = 0.0;
  double r2_alpha = 0.0;
  double r2_beta = 0.0;
  /// Intercepts of the log-log fits (log of the rate constants).
  double log_c_alpha = 0.0;
  double log_c_beta = 0.0;
};

/// Log-log fits of |mean_diff_l| and var_diff_l against h_l over levels
/// 1..L. Throws FitDegenerate when fewer than two difference levels are given,
/// a quantity is nonpositive, or either regressor or regressand is constant.
RateEstimate fit_rates(std::span<const LevelStatistics> levels, std::span<const double> h_values,
                       double gamma);

/// M_l = ceil((2/eps^2) sqrt(V_l/W_l) sum_k sqrt(V_k W_k)), at least 2, then
/// topped up so that sum V_l/M_l <= eps^2/2 holds in floating point.
std::vector<std::size_t> allocate_samples(double epsilon, std::span<const double> variances,
                                          std::span<const double> works);

/// A-priori level variances V_l = (h_l^t log(1/h_l)^s)^2 with h_l = N_l^{-1/d}
/// for a d-dimensional mesh hierarchy with N_l dofs. Throws InvalidArgument
/// unless every h_l < 1.
std::vector<double> model_variances(std::span<const double> dofs, int space_dim, double t,
                                    double log_power);

enum class CostRegime { BetaAboveGamma, BetaEqualsGamma, BetaBelowGamma };

std::string to_string(CostRegime r);

struct CostPrediction {
  CostRegime regime = CostRegime::BetaAboveGamma;
  double cost_exponent = -2.0;
  bool squared_log = false;
  /// eps^exponent, times log(1/eps)^2 in the balanced case.
  double predicted_cost = 0.0;
};

/// Asymptotic MLMC cost as a power of eps. Throws RateHypothesisViolated if
/// alpha < min(beta, gamma) / 2.
CostPrediction predict_cost_regime(double alpha, double beta, double gamma, double epsilon);

struct RmseResult {
  double rmse = 0.0;
  std::vector<double> errors;
};

/// Runs `estimator(r)` for r = 0..R-1 and measures Euclidean errors against
/// `reference`.
RmseResult rmse_harness(const std::function<std::vector<double>(std::uint32_t)>& estimator,
                        std::span<const double> reference, std::uint32_t repetitions);

/// Pilot statistics on every level 0..max_level and the rates fitted to them.
struct PilotResult {
  std::vector<LevelStatistics> levels;
  std::vector<double> h;
  RateEstimate rates;
};

PilotResult run_pilot(const LevelEvaluator& model, const SampleSource& source, int max_level,
                      std::size_t samples, const WorkerPool& pool = WorkerPool::serial());

struct MlmcPlan {
  int finest_level = 0;
  double predicted_bias = 0.0;
  std::vector<std::size_t> allocation;
};

/// Smallest L <= max_level with extrapolated bias C h_L^alpha / (2^alpha - 1)
/// below eps/sqrt(2), and the allocation for the pilot variances on 0..L.
MlmcPlan plan_mlmc(const PilotResult& pilot, double epsilon, int max_level);

/// Pilot, plan, then top up every level to its allocation. Pilot samples are
/// the first samples of each level stream and are reused.
MlmcResult adaptive_mlmc(const LevelEvaluator& model, const SampleSource& source, double epsilon,
                         int max_level, std::size_t pilot_samples,
                         const WorkerPool& pool = WorkerPool::serial(), MlmcPlan* plan_out = nullptr);

}  // namespace mlmcuq
