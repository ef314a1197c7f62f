#include "mlmcuq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlmcuq/error.hpp"
#include "mlmcuq/regression.hpp"

namespace mlmcuq {

FunctionEvaluator::FunctionEvaluator(std::size_t dim, std::size_t qoi_size, int max_level, Eval eval,
                                     std::function<double(int)> work, double h0)
    : dim_(dim), qoi_size_(qoi_size), max_level_(max_level), eval_(std::move(eval)),
      work_(std::move(work)), h0_(h0) {
  if (dim_ == 0 || qoi_size_ == 0 || max_level_ < 0)
    throw Error(ErrorCode::InvalidArgument, "evaluator needs dim, qoi size >= 1 and max level >= 0");
}

double FunctionEvaluator::mesh_width(int level) const { return std::ldexp(h0_, -level); }

Model1DEvaluator::Model1DEvaluator(Transmission1D problem, std::vector<double> points, int max_level,
                                   bool per_dof, bool j_factor)
    : problem_(std::move(problem)), points_(std::move(points)), max_level_(max_level),
      per_dof_(per_dof), j_factor_(j_factor) {
  problem_.validate();
  if (problem_.dim() == 0) throw Error(ErrorCode::InvalidProblem, "model needs at least one coefficient");
  if (!problem_.coercive())
    throw Error(ErrorCode::IndefiniteForm, "coercivity guard violated: kappa^2 too large");
  if (max_level_ < 0) throw Error(ErrorCode::InvalidArgument, "max level must be nonnegative");
  // point_qoi checks the points on every call; fail early here instead.
  (void)point_qoi(problem_, ParamVector::zeros(problem_.dim()), QoiLevel::exact_solution(), points_);
}

double Model1DEvaluator::work(int level) const {
  const double base = per_dof_ ? static_cast<double>(dofs_at_level(problem_, level)) : 1.0;
  return j_factor_ ? base * static_cast<double>(problem_.dim()) : base;
}

double Model1DEvaluator::mesh_width(int level) const { return std::ldexp(problem_.h0, -level); }

void Model1DEvaluator::evaluate(int level, const ParamVector& y, std::span<double> out) const {
  point_qoi_into(problem_, y, QoiLevel::fem(level), points_, out);
}

ParamVector SampleSource::draw(int level, std::uint64_t index, std::size_t dim) const {
  if (index > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::InvalidArgument, "sample index exceeds the 2^32 stream space");
  return sample(seed, StreamKey{static_cast<std::uint32_t>(level), replicate,
                                static_cast<std::uint32_t>(index), tag},
                dim);
}

LevelStatistics::LevelStatistics(int lvl, std::size_t qoi_size, double work)
    : level(lvl), mean_diff(qoi_size, 0.0), work_per_sample(work), m2(qoi_size, 0.0) {}

void LevelStatistics::add(std::span<const double> y) {
  ++samples;
  const double n = static_cast<double>(samples);
  double var = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double delta = y[k] - mean_diff[k];
    mean_diff[k] += delta / n;
    m2[k] += delta * (y[k] - mean_diff[k]);
    var += m2[k];
  }
  var_diff = samples > 1 ? var / (n - 1.0) : 0.0;
}

double LevelStatistics::mean_norm() const {
  double s = 0.0;
  for (double m : mean_diff) s += m * m;
  return std::sqrt(s);
}

namespace {

// Folds samples [begin, end) of the stream level `level` into `stats`. With
// `difference` set the sample is Q_level - Q_{level-1}, else Q_level.
void accumulate(const LevelEvaluator& model, const SampleSource& source, int level,
                bool difference, std::uint64_t begin, std::uint64_t end, LevelStatistics& stats,
                const WorkerPool& pool) {
  if (level < 0 || level > model.max_level())
    throw Error(ErrorCode::InvalidArgument, "level outside the evaluator hierarchy");
  const std::size_t q = model.qoi_size();
  const std::size_t dim = model.dim();
  constexpr std::uint64_t kChunk = 1 << 15;
  std::vector<double> buffer;
  for (std::uint64_t lo = begin; lo < end; lo += kChunk) {
    const std::size_t count = static_cast<std::size_t>(std::min(kChunk, end - lo));
    buffer.resize(count * q);
    pool.parallel_for(count, [&](std::size_t b, std::size_t e) {
      std::vector<double> coarse(q);
      for (std::size_t i = b; i < e; ++i) {
        const ParamVector y = source.draw(level, lo + i, dim);
        std::span<double> fine(buffer.data() + i * q, q);
        model.evaluate(level, y, fine);
        if (difference && level > 0) {
          model.evaluate(level - 1, y, coarse);
          for (std::size_t k = 0; k < q; ++k) fine[k] -= coarse[k];
        }
      }
    });
    // Sequential fold in sample order keeps results independent of workers.
    for (std::size_t i = 0; i < count; ++i)
      stats.add(std::span<const double>(buffer.data() + i * q, q));
  }
}

}  // namespace

void accumulate_level(const LevelEvaluator& model, const SampleSource& source, int level,
                      std::uint64_t begin, std::uint64_t end, LevelStatistics& stats,
                      const WorkerPool& pool) {
  accumulate(model, source, level, true, begin, end, stats, pool);
}

McResult mc_estimate(const LevelEvaluator& model, const SampleSource& source, int level,
                     std::size_t samples, const WorkerPool& pool) {
  if (samples < 2) throw Error(ErrorCode::TooFewSamples, "Monte Carlo needs at least 2 samples");
  LevelStatistics stats(level, model.qoi_size(), model.work(level));
  accumulate(model, source, level, false, 0, samples, stats, pool);
  return {stats.mean_diff, stats.var_diff, stats.cost()};
}

double MlmcResult::total_error_estimate() const {
  const double b = std::isnan(bias_estimate) ? 0.0 : bias_estimate;
  return std::sqrt(b * b + statistical_error_estimate * statistical_error_estimate);
}

MlmcResult mlmc_combine(std::vector<LevelStatistics> levels, double bias_rate) {
  if (levels.empty()) throw Error(ErrorCode::TooFewSamples, "no levels");
  MlmcResult r;
  r.estimate.assign(levels.front().mean_diff.size(), 0.0);
  double stat = 0.0;
  for (const LevelStatistics& s : levels) {
    if (s.samples < 2) throw Error(ErrorCode::TooFewSamples, "every level needs at least 2 samples");
    for (std::size_t k = 0; k < r.estimate.size(); ++k) r.estimate[k] += s.mean_diff[k];
    r.total_work += s.cost();
    stat += s.var_diff / static_cast<double>(s.samples);
  }
  r.statistical_error_estimate = std::sqrt(stat);
  r.bias_estimate = levels.size() == 1
                        ? std::numeric_limits<double>::quiet_NaN()
                        : levels.back().mean_norm() / (std::exp2(bias_rate) - 1.0);
  r.per_level = std::move(levels);
  return r;
}

MlmcResult mlmc_estimate(const LevelEvaluator& model, const SampleSource& source,
                         std::span<const std::size_t> allocation, double bias_rate,
                         const WorkerPool& pool) {
  if (allocation.empty()) throw Error(ErrorCode::TooFewSamples, "empty allocation");
  if (static_cast<int>(allocation.size()) > model.max_level() + 1)
    throw Error(ErrorCode::InvalidArgument, "allocation exceeds the evaluator hierarchy");
  for (std::size_t m : allocation)
    if (m < 2) throw Error(ErrorCode::TooFewSamples, "every level needs at least 2 samples");
  std::vector<LevelStatistics> levels;
  for (std::size_t l = 0; l < allocation.size(); ++l) {
    const int level = static_cast<int>(l);
    LevelStatistics s(level, model.qoi_size(), model.work(level));
    accumulate_level(model, source, level, 0, allocation[l], s, pool);
    levels.push_back(std::move(s));
  }
  return mlmc_combine(std::move(levels), bias_rate);
}

RateEstimate fit_rates(std::span<const LevelStatistics> levels, std::span<const double> h_values,
                       double gamma) {
  if (levels.size() != h_values.size())
    throw Error(ErrorCode::InvalidArgument, "one mesh width per level required");
  std::vector<double> h, m, v;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    h.push_back(h_values[l]);
    m.push_back(levels[l].mean_norm());
    v.push_back(levels[l].var_diff);
  }
  if (h.size() < 2) throw Error(ErrorCode::FitDegenerate, "need at least two difference levels");
  auto positive = [](const std::vector<double>& a) {
    return std::all_of(a.begin(), a.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
  };
  if (!positive(h) || !positive(m) || !positive(v))
    throw Error(ErrorCode::FitDegenerate, "rate fit needs positive means and variances");
  auto constant = [](const std::vector<double>& a) {
    return std::all_of(a.begin(), a.end(), [&](double x) { return x == a.front(); });
  };
  if (constant(m) || constant(v)) throw Error(ErrorCode::FitDegenerate, "regressand is constant");
  const LineFit fa = fit_loglog(h, m);
  const LineFit fb = fit_loglog(h, v);
  RateEstimate r;
  r.alpha_hat = fa.slope;
  r.beta_hat = fb.slope;
  r.gamma = gamma;
  r.r2_alpha = fa.r2;
  r.r2_beta = fb.r2;
  r.log_c_alpha = fa.intercept;
  r.log_c_beta = fb.intercept;
  return r;
}

std::vector<std::size_t> allocate_samples(double epsilon, std::span<const double> variances,
                                          std::span<const double> works) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (variances.empty() || variances.size() != works.size())
    throw Error(ErrorCode::InvalidArgument, "need matching nonempty variance and work lists");
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(variances[l] >= 0.0) || !std::isfinite(variances[l]))
      throw Error(ErrorCode::InvalidArgument, "variances must be finite and nonnegative");
    if (!(works[l] > 0.0) || !std::isfinite(works[l]))
      throw Error(ErrorCode::InvalidArgument, "works must be finite and positive");
  }
  const std::size_t n = variances.size();
  double sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) sum += std::sqrt(variances[l] * works[l]);
  const double budget = 0.5 * epsilon * epsilon;
  std::vector<std::size_t> m(n, 2);
  if (sum == 0.0) return m;
  for (std::size_t l = 0; l < n; ++l) {
    const double cont = std::sqrt(variances[l] / works[l]) * sum / budget;
    if (!(cont < 1e18)) throw Error(ErrorCode::InvalidArgument, "allocation overflows: epsilon too small");
    m[l] = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(cont)));
  }
  auto total = [&] {
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) s += variances[l] / static_cast<double>(m[l]);
    return s;
  };
  // Ceiling leaves the constraint satisfied up to rounding; repair greedily.
  while (total() > budget) {
    std::size_t best = 0;
    double gain = -1.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double ml = static_cast<double>(m[l]);
      const double g = variances[l] / (ml * (ml + 1.0) * works[l]);
      if (g > gain) {
        gain = g;
        best = l;
      }
    }
    ++m[best];
  }
  return m;
}

std::vector<double> model_variances(std::span<const double> dofs, int space_dim, double t,
                                    double log_power) {
  if (space_dim < 1) throw Error(ErrorCode::InvalidArgument, "space dimension must be positive");
  std::vector<double> v;
  v.reserve(dofs.size());
  for (double n : dofs) {
    if (!(n > 1.0)) throw Error(ErrorCode::InvalidArgument, "dof counts must exceed 1");
    const double h = std::pow(n, -1.0 / space_dim);
    const double e = std::pow(h, t) * std::pow(std::log(1.0 / h), log_power);
    v.push_back(e * e);
  }
  return v;
}

std::string to_string(CostRegime r) {
  switch (r) {
    case CostRegime::BetaAboveGamma: return "beta>gamma";
    case CostRegime::BetaEqualsGamma: return "beta=gamma";
    case CostRegime::BetaBelowGamma: return "beta<gamma";
  }
  return "unknown";
}

CostPrediction predict_cost_regime(double alpha, double beta, double gamma, double epsilon) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rates must be positive");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (alpha < 0.5 * std::min(beta, gamma))
    throw Error(ErrorCode::RateHypothesisViolated, "alpha < min(beta, gamma)/2");
  CostPrediction p;
  constexpr double tol = 1e-12;
  if (std::abs(beta - gamma) <= tol * std::max(beta, gamma)) {
    p.regime = CostRegime::BetaEqualsGamma;
    p.cost_exponent = -2.0;
    p.squared_log = true;
  } else if (beta > gamma) {
    p.regime = CostRegime::BetaAboveGamma;
    p.cost_exponent = -2.0;
  } else {
    p.regime = CostRegime::BetaBelowGamma;
    p.cost_exponent = -2.0 - (gamma - beta) / alpha;
  }
  p.predicted_cost = std::pow(epsilon, p.cost_exponent);
  if (p.squared_log) {
    const double lg = std::log(1.0 / epsilon);
    p.predicted_cost *= lg * lg;
  }
  return p;
}

RmseResult rmse_harness(const std::function<std::vector<double>(std::uint32_t)>& estimator,
                        std::span<const double> reference, std::uint32_t repetitions) {
  if (repetitions < 2) throw Error(ErrorCode::InvalidArgument, "rmse needs at least 2 repetitions");
  RmseResult r;
  double sq = 0.0;
  for (std::uint32_t rep = 0; rep < repetitions; ++rep) {
    const std::vector<double> est = estimator(rep);
    if (est.size() != reference.size())
      throw Error(ErrorCode::InvalidArgument, "estimate and reference sizes differ");
    double e2 = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) e2 += (est[k] - reference[k]) * (est[k] - reference[k]);
    r.errors.push_back(std::sqrt(e2));
    sq += e2;
  }
  r.rmse = std::sqrt(sq / repetitions);
  return r;
}

PilotResult run_pilot(const LevelEvaluator& model, const SampleSource& source, int max_level,
                      std::size_t samples, const WorkerPool& pool) {
  if (samples < 2) throw Error(ErrorCode::TooFewSamples, "pilot needs at least 2 samples per level");
  if (max_level > model.max_level())
    throw Error(ErrorCode::InvalidArgument, "pilot level exceeds the evaluator hierarchy");
  PilotResult p;
  for (int l = 0; l <= max_level; ++l) {
    LevelStatistics s(l, model.qoi_size(), model.work(l));
    accumulate_level(model, source, l, 0, samples, s, pool);
    p.levels.push_back(std::move(s));
    p.h.push_back(model.mesh_width(l));
  }
  const double gamma =
      max_level >= 1 ? std::log2(model.work(max_level) / model.work(max_level - 1)) : 1.0;
  p.rates = fit_rates(p.levels, p.h, gamma);
  return p;
}

MlmcPlan plan_mlmc(const PilotResult& pilot, double epsilon, int max_level) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const int top = std::min<int>(max_level, static_cast<int>(pilot.levels.size()) - 1);
  const double a = pilot.rates.alpha_hat;
  if (!(a > 0.0)) throw Error(ErrorCode::FitDegenerate, "fitted bias rate is not positive");
  MlmcPlan plan;
  plan.finest_level = top;
  for (int l = 0; l <= top; ++l) {
    const double bias =
        std::exp(pilot.rates.log_c_alpha) * std::pow(pilot.h[static_cast<std::size_t>(l)], a) /
        (std::exp2(a) - 1.0);
    plan.predicted_bias = bias;
    if (bias <= epsilon / std::sqrt(2.0)) {
      plan.finest_level = l;
      break;
    }
  }
  std::vector<double> v, w;
  for (int l = 0; l <= plan.finest_level; ++l) {
    v.push_back(pilot.levels[static_cast<std::size_t>(l)].var_diff);
    w.push_back(pilot.levels[static_cast<std::size_t>(l)].work_per_sample);
  }
  plan.allocation = allocate_samples(epsilon, v, w);
  return plan;
}

MlmcResult adaptive_mlmc(const LevelEvaluator& model, const SampleSource& source, double epsilon,
                         int max_level, std::size_t pilot_samples, const WorkerPool& pool,
                         MlmcPlan* plan_out) {
  PilotResult pilot = run_pilot(model, source, max_level, pilot_samples, pool);
  const MlmcPlan plan = plan_mlmc(pilot, epsilon, max_level);
  std::vector<LevelStatistics> levels;
  for (int l = 0; l <= plan.finest_level; ++l) {
    LevelStatistics s = pilot.levels[static_cast<std::size_t>(l)];
    const std::size_t target = plan.allocation[static_cast<std::size_t>(l)];
    if (target > s.samples) accumulate_level(model, source, l, s.samples, target, s, pool);
    levels.push_back(std::move(s));
  }
  if (plan_out) *plan_out = plan;
  return mlmc_combine(std::move(levels), pilot.rates.alpha_hat);
}

}  // namespace mlmcuq
