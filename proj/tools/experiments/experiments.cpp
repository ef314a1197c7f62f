#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "mlmcuq/error.hpp"
#include "mlmcuq/estimators.hpp"
#include "mlmcuq/mie2d.hpp"
#include "mlmcuq/model1d.hpp"
#include "mlmcuq/regression.hpp"
#include "mlmcuq/version.hpp"

namespace mlmcuq::experiments {

using nlohmann::json;

namespace {

// Stream tags; every consumer of the experiment seed draws from its own.
constexpr std::uint32_t kTagPilot = 1;
constexpr std::uint32_t kTagMcPilot = 2;
constexpr std::uint32_t kTagFemDraws = 5;
constexpr std::uint32_t kTagMlmcSweep = 16;
constexpr std::uint32_t kTagMcSweep = 96;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// JSON has no NaN; such values are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json certificate_json(const KinkCertificate& k) {
  return {{"left_slope", k.left_slope},     {"right_slope", k.right_slope},
          {"mismatch", k.mismatch},         {"smooth_variation", k.smooth_variation},
          {"max_jump", k.max_jump},         {"range", k.range},
          {"kink", k.kink},                 {"continuous", k.continuous}};
}

json rates_json(const RateEstimate& r) {
  return {{"alpha_hat", r.alpha_hat}, {"beta_hat", r.beta_hat}, {"gamma", r.gamma},
          {"r2_alpha", r.r2_alpha},   {"r2_beta", r.r2_beta}};
}

std::string point_label(const std::string& prefix, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%g", prefix.c_str(), x);
  return buf;
}

Model1DEvaluator make_evaluator(const ExperimentConfig& c) {
  return Model1DEvaluator(c.model1d.problem(), c.model1d.points, c.estimators.max_level,
                          c.estimators.per_dof, c.estimators.j_factor);
}

// Work exponent gamma from W_l ~ h_l^{-gamma}.
double fitted_gamma(const LevelEvaluator& model) {
  std::vector<double> h, w;
  for (int l = 0; l <= model.max_level(); ++l) {
    h.push_back(model.mesh_width(l));
    w.push_back(model.work(l));
  }
  return -fit_loglog(h, w).slope;
}

PilotResult shared_pilot(const ExperimentConfig& c, const LevelEvaluator& model, const WorkerPool& pool) {
  PilotResult pilot = run_pilot(model, {c.estimator_seed(), 0, kTagPilot}, c.estimators.max_level,
                                c.estimators.pilot_samples, pool);
  pilot.rates.gamma = fitted_gamma(model);
  return pilot;
}

struct SweepPoint {
  double epsilon = 0.0;
  MlmcPlan plan;
  double work = 0.0;
  double rmse = 0.0;
  double mean_error_estimate = 0.0;
};

SweepPoint mlmc_sweep_point(const ExperimentConfig& c, const LevelEvaluator& model, const PilotResult& pilot,
                            const std::vector<double>& reference, std::size_t k, double epsilon,
                            const WorkerPool& pool) {
  SweepPoint p;
  p.epsilon = epsilon;
  p.plan = plan_mlmc(pilot, epsilon, c.estimators.max_level);
  std::vector<double> work(c.estimators.repetitions), estimates(c.estimators.repetitions);
  const auto tag = static_cast<std::uint32_t>(kTagMlmcSweep + k);
  const RmseResult r = rmse_harness(
      [&](std::uint32_t rep) {
        const MlmcResult m = mlmc_estimate(model, {c.estimator_seed(), rep + 1, tag}, p.plan.allocation,
                                           pilot.rates.alpha_hat, pool);
        work[rep] = m.total_work;
        estimates[rep] = m.total_error_estimate();
        return m.estimate;
      },
      reference, c.estimators.repetitions);
  p.rmse = r.rmse;
  double w = 0.0, e = 0.0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    w += work[i];
    e += estimates[i];
  }
  p.work = w / static_cast<double>(work.size());
  p.mean_error_estimate = e / static_cast<double>(estimates.size());
  return p;
}

ExperimentOutput kink_profile(const ExperimentConfig& c) {
  const KinkConfig& k = c.kink;
  Transmission1D problem = c.model1d.problem();
  const double mid = 0.5 * (k.xi_min + k.xi_max);
  const double half = 0.5 * (k.xi_max - k.xi_min);
  problem.interface_base = mid;
  problem.interface_betas = {half};
  problem.validate();

  auto at = [&](double xi, double x0) {
    const double y = std::clamp((xi - mid) / half, -1.0, 1.0);
    return exact_solution(problem, ParamVector({y}), x0);
  };

  CsvTable table{"kink_profile.csv", {"xi"}, {}};
  for (double x0 : k.points) table.header.push_back(point_label("u_x0=", x0));
  for (std::size_t i = 0; i < k.samples; ++i) {
    const double xi = i + 1 == k.samples ? k.xi_max
                                         : k.xi_min + (k.xi_max - k.xi_min) * static_cast<double>(i) / (k.samples - 1);
    std::vector<std::string> row{cell(xi)};
    for (double x0 : k.points) row.push_back(cell(at(xi, x0)));
    table.add_row(std::move(row));
  }

  json points = json::array();
  for (double x0 : k.points) {
    const double step = 1e-3;
    json entry = {{"x0", x0}, {"crossed", k.xi_min + 2.0 * step < x0 && x0 < k.xi_max - 2.0 * step}};
    if (entry["crossed"].get<bool>()) {
      const KinkCertificate cert = certify_kink([&](double xi) { return at(xi, x0); }, x0, k.xi_min, k.xi_max, step);
      entry["certificate"] = certificate_json(cert);
    }
    points.push_back(entry);
  }
  return {{{"experiment", c.experiment}, {"points", points}}, {table}};
}

ExperimentOutput fem_rates(const ExperimentConfig& c, const WorkerPool& pool) {
  const FemRatesConfig& f = c.fem_rates;
  const Transmission1D problem = c.model1d.problem();
  const std::size_t dim = problem.dim();
  const auto levels = static_cast<std::size_t>(f.max_level + 1);

  // errors[i * levels + l]: max point error of draw i at level l.
  std::vector<double> errors(f.draws * levels, 0.0);
  pool.parallel_for(f.draws, [&](std::size_t begin, std::size_t end) {
    std::vector<double> fem(f.points.size());
    for (std::size_t i = begin; i < end; ++i) {
      const ParamVector y = sample(c.seed, {0, 0, static_cast<std::uint32_t>(i), kTagFemDraws}, dim);
      const std::vector<double> exact = point_qoi(problem, y, QoiLevel::exact_solution(), f.points);
      for (std::size_t l = 0; l < levels; ++l) {
        point_qoi_into(problem, y, QoiLevel::fem(static_cast<int>(l)), f.points, fem);
        double e = 0.0;
        for (std::size_t p = 0; p < fem.size(); ++p) e = std::max(e, std::abs(fem[p] - exact[p]));
        errors[i * levels + l] = e;
      }
    }
  });

  CsvTable table{"fem_rates.csv", {"level", "h", "dofs", "max_error"}, {}};
  std::vector<double> hs, es;
  for (std::size_t l = 0; l < levels; ++l) {
    double e = 0.0;
    for (std::size_t i = 0; i < f.draws; ++i) e = std::max(e, errors[i * levels + l]);
    const double h = problem.h0 / std::pow(2.0, static_cast<double>(l));
    hs.push_back(h);
    es.push_back(e);
    table.add_row({cell(l), cell(h), cell(dofs_at_level(problem, static_cast<int>(l))), cell(e)});
  }
  json summary = {{"experiment", c.experiment}, {"max_error", es}};
  const bool fittable = std::all_of(es.begin(), es.end(), [](double e) { return e > 0.0; });
  if (fittable) {
    const LineFit fit = fit_loglog(hs, es);
    summary["rate"] = {{"slope", fit.slope}, {"r2", fit.r2}};
  } else {
    summary["rate"] = nullptr;
  }
  return {summary, {table}};
}

ExperimentOutput smolyak_degradation(const ExperimentConfig& c, const WorkerPool& pool) {
  const SparseQuadConfig& q = c.sparse_quad;
  const Transmission1D problem = c.model1d.problem();
  const MieFamily family = c.mie.family();

  std::vector<std::vector<double>> sets = q.point_sets;
  if (q.qoi == "mie") sets = {{}};

  ExperimentOutput out;
  json runs = json::array();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const std::vector<double>& pts = sets[k];
    Integrand f;
    if (q.qoi == "model1d-exact") {
      f = [&](const ParamVector& y) { return point_qoi(problem, y, QoiLevel::exact_solution(), pts); };
    } else if (q.qoi == "model1d-fem") {
      f = [&](const ParamVector& y) { return point_qoi(problem, y, QoiLevel::fem(q.fem_level), pts); };
    } else {
      f = [&](const ParamVector& y) { return radial_qoi(family, y, c.mie.points); };
    }
    AdaptiveOptions opts;
    opts.budget = q.budget;
    opts.tolerance = q.tolerance;
    const AdaptiveResult r = adaptive_integrate(f, q.J, opts, pool);

    CsvTable table{"smolyak_trace_" + std::to_string(k) + ".csv",
                   {"iteration", "cardinality", "evaluations", "estimated_error"},
                   {}};
    for (const TraceEntry& t : r.trace)
      table.add_row({cell(t.iteration), cell(t.cardinality), cell(t.evaluations), cell(t.estimated_error)});
    out.tables.push_back(std::move(table));

    json run = {{"trace_file", out.tables.back().file},
                {"evaluations", r.evaluations},
                {"cardinality", r.index_set.members().size()},
                {"estimated_error", r.trace.back().estimated_error},
                {"final_decade_slope", number_or_null(final_decade_slope(r.trace))},
                {"estimate", r.estimate}};
    if (q.qoi == "mie") {
      json pts2 = json::array();
      for (const Point2& p : c.mie.points) pts2.push_back({p.x, p.y});
      run["points"] = pts2;
    } else {
      run["points"] = pts;
    }
    if (q.qoi == "model1d-exact") {
      const ReferenceMean ref = exact_mean(problem, pts);
      double err = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) err += std::pow(r.estimate[i] - ref.values[i], 2);
      run["reference"] = ref.values;
      run["true_error"] = std::sqrt(err);
    }
    runs.push_back(run);
  }
  out.summary = {{"experiment", c.experiment}, {"qoi", q.qoi}, {"runs", runs}};
  return out;
}

ExperimentOutput mlmc_error_work(const ExperimentConfig& c, const WorkerPool& pool) {
  const Model1DEvaluator model = make_evaluator(c);
  const PilotResult pilot = shared_pilot(c, model, pool);
  const ReferenceMean ref = exact_mean(model.problem(), c.model1d.points);
  const std::vector<double> eps = c.estimators.epsilons();

  CsvTable curve{"mlmc_error_work.csv",
                 {"epsilon", "finest_level", "total_work", "rmse", "mean_error_estimate"},
                 {}};
  CsvTable alloc{"mlmc_allocation.csv", {"epsilon", "level", "samples", "pilot_variance", "work_per_sample"}, {}};
  std::vector<double> works, rmses;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const SweepPoint p = mlmc_sweep_point(c, model, pilot, ref.values, k, eps[k], pool);
    curve.add_row({cell(p.epsilon), cell(p.plan.finest_level), cell(p.work), cell(p.rmse),
                   cell(p.mean_error_estimate)});
    for (std::size_t l = 0; l < p.plan.allocation.size(); ++l)
      alloc.add_row({cell(p.epsilon), cell(l), cell(p.plan.allocation[l]), cell(pilot.levels[l].var_diff),
                     cell(pilot.levels[l].work_per_sample)});
    works.push_back(p.work);
    rmses.push_back(p.rmse);
  }

  CsvTable pilot_table{"mlmc_pilot.csv", {"level", "h", "mean_diff_norm", "var_diff", "work_per_sample"}, {}};
  for (std::size_t l = 0; l < pilot.levels.size(); ++l)
    pilot_table.add_row({cell(l), cell(pilot.h[l]), cell(pilot.levels[l].mean_norm()),
                         cell(pilot.levels[l].var_diff), cell(pilot.levels[l].work_per_sample)});

  const LineFit fit = fit_loglog(works, rmses);
  const CostPrediction regime =
      predict_cost_regime(pilot.rates.alpha_hat, pilot.rates.beta_hat, pilot.rates.gamma, eps.back());
  json summary = {{"experiment", c.experiment},
                  {"rates", rates_json(pilot.rates)},
                  {"regime", to_string(regime.regime)},
                  {"predicted_cost_exponent", regime.cost_exponent},
                  {"predicted_error_work_slope", 1.0 / regime.cost_exponent},
                  {"reference", ref.values},
                  {"reference_truncation_bound", ref.truncation_bound},
                  {"error_work_slope", fit.slope},
                  {"error_work_r2", fit.r2},
                  {"epsilons", eps},
                  {"total_work", works},
                  {"rmse", rmses}};
  return {summary, {curve, alloc, pilot_table}};
}

ExperimentOutput mc_vs_mlmc(const ExperimentConfig& c, const WorkerPool& pool) {
  const Model1DEvaluator model = make_evaluator(c);
  const PilotResult pilot = shared_pilot(c, model, pool);
  const ReferenceMean ref = exact_mean(model.problem(), c.model1d.points);
  const std::vector<double> eps = c.estimators.epsilons();
  const std::uint32_t reps = c.estimators.repetitions;

  // Variance of Q_L itself, for the single-level sample count.
  std::map<int, double> q_variance;
  auto variance_at = [&](int level) {
    auto it = q_variance.find(level);
    if (it != q_variance.end()) return it->second;
    const McResult m =
        mc_estimate(model, {c.estimator_seed(), 0, kTagMcPilot}, level, c.estimators.pilot_samples, pool);
    return q_variance[level] = m.variance;
  };

  CsvTable table{"mc_vs_mlmc.csv",
                 {"epsilon", "finest_level", "mlmc_work", "mc_work", "work_ratio", "mlmc_rmse", "mc_rmse", "mc_samples"},
                 {}};
  std::vector<double> mlmc_work, mc_work, mlmc_rmse, mc_rmse;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const SweepPoint p = mlmc_sweep_point(c, model, pilot, ref.values, k, eps[k], pool);
    const int level = p.plan.finest_level;
    const double m_real = std::ceil(2.0 * variance_at(level) / (eps[k] * eps[k]));
    const auto samples = static_cast<std::size_t>(std::max(2.0, m_real));
    const auto tag = static_cast<std::uint32_t>(kTagMcSweep + k);
    double work = 0.0;
    const RmseResult r = rmse_harness(
        [&](std::uint32_t rep) {
          const McResult m = mc_estimate(model, {c.estimator_seed(), rep + 1, tag}, level, samples, pool);
          work += m.work;
          return m.estimate;
        },
        ref.values, reps);
    work /= reps;
    table.add_row({cell(eps[k]), cell(level), cell(p.work), cell(work), cell(p.work / work), cell(p.rmse),
                   cell(r.rmse), cell(samples)});
    mlmc_work.push_back(p.work);
    mc_work.push_back(work);
    mlmc_rmse.push_back(p.rmse);
    mc_rmse.push_back(r.rmse);
  }

  const std::size_t tight = eps.size() - 1;
  json summary = {{"experiment", c.experiment},
                  {"rates", rates_json(pilot.rates)},
                  {"reference", ref.values},
                  {"epsilons", eps},
                  {"mlmc_work", mlmc_work},
                  {"mc_work", mc_work},
                  {"mlmc_rmse", mlmc_rmse},
                  {"mc_rmse", mc_rmse},
                  {"tightest_epsilon", eps[tight]},
                  {"work_ratio_at_tightest", mlmc_work[tight] / mc_work[tight]}};
  if (eps.size() >= 2) {
    summary["mlmc_error_work_slope"] = fit_loglog(mlmc_work, mlmc_rmse).slope;
    summary["mc_error_work_slope"] = fit_loglog(mc_work, mc_rmse).slope;
  }
  return {summary, {table}};
}

ExperimentOutput allocation_table(const ExperimentConfig& c) {
  const AllocationConfig& a = c.allocation;
  const std::vector<double> v = model_variances(a.dofs, a.space_dim, a.t, a.log_power);
  std::vector<double> w;
  for (double n : a.dofs) w.push_back(a.J * n);

  CsvTable table{"allocation_table.csv", {"L", "epsilon"}, {}};
  for (std::size_t l = 0; l < a.dofs.size(); ++l) table.header.push_back("M_" + std::to_string(l));
  table.header.push_back("total_work");

  json rows = json::array();
  for (std::size_t big_l = 0; big_l < a.dofs.size(); ++big_l) {
    double eps = 0.0;
    if (!a.epsilons.empty()) {
      eps = a.epsilons[big_l];
    } else {
      const double h = std::pow(a.dofs[big_l], -1.0 / a.space_dim);
      eps = std::sqrt(2.0) * std::pow(h, a.t) * std::pow(std::log(1.0 / h), a.log_power);
    }
    const std::span<const double> vs(v.data(), big_l + 1), ws(w.data(), big_l + 1);
    const std::vector<std::size_t> m = allocate_samples(eps, vs, ws);
    double total = 0.0;
    std::vector<std::string> row{cell(big_l), cell(eps)};
    for (std::size_t l = 0; l < a.dofs.size(); ++l) {
      row.push_back(l <= big_l ? cell(m[l]) : std::string());
      if (l <= big_l) total += static_cast<double>(m[l]) * w[l];
    }
    row.push_back(cell(total));
    table.add_row(std::move(row));
    rows.push_back({{"L", big_l}, {"epsilon", eps}, {"samples", m}, {"total_work", total}});
  }
  return {{{"experiment", c.experiment}, {"variances", v}, {"works", w}, {"rows", rows}}, {table}};
}

ExperimentOutput mie_probe(const ExperimentConfig& c, const WorkerPool& pool) {
  const MieConfig& m = c.mie;
  const MieFamily family = m.family();
  const std::size_t n = m.samples;
  auto y_at = [&](std::size_t i) { return i + 1 == n ? 1.0 : -1.0 + 2.0 * static_cast<double>(i) / (n - 1); };

  std::vector<std::vector<double>> values(n);
  pool.parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) values[i] = radial_qoi(family, ParamVector({y_at(i)}), m.points);
  });

  CsvTable table{"mie_profile.csv", {"y", "radius"}, {}};
  for (std::size_t p = 0; p < m.points.size(); ++p) table.header.push_back("re_u_" + std::to_string(p));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{cell(y_at(i)), cell(m.r0 * (1.0 + m.c * y_at(i)))};
    for (double v : values[i]) row.push_back(cell(v));
    table.add_row(std::move(row));
  }

  // Truncation self-convergence at the nominal radius: N versus 2N modes.
  MieScatterer nominal = family.at(ParamVector({0.0}));
  const ExpansionCoefficients base = expansion_coefficients(nominal);
  MieScatterer doubled = nominal;
  doubled.truncation *= 2;
  const ExpansionCoefficients fine = expansion_coefficients(doubled);
  double truncation_change = 0.0;
  for (const Point2& p : m.points)
    truncation_change = std::max(truncation_change, std::abs(field_at(nominal, base, p) - field_at(doubled, fine, p)));

  json points = json::array();
  const double step = 1e-3;
  for (std::size_t p = 0; p < m.points.size(); ++p) {
    const double y_star = (m.points[p].norm() / m.r0 - 1.0) / m.c;
    const bool crossed = std::abs(y_star) < 1.0 - 2.0 * step;
    json entry = {{"x", m.points[p].x}, {"y", m.points[p].y}, {"crossing_parameter", y_star}, {"crossed", crossed}};
    if (crossed) {
      const Point2 pt = m.points[p];
      auto g = [&](double y) { return radial_qoi(family, ParamVector({y}), std::span<const Point2>(&pt, 1))[0]; };
      entry["certificate"] = certificate_json(certify_kink(g, y_star, -1.0, 1.0, step));
    }
    points.push_back(entry);
  }
  json summary = {{"experiment", c.experiment},
                  {"truncation", nominal.truncation},
                  {"truncation_doubling_change", truncation_change},
                  {"points", points}};
  return {summary, {table}};
}

}  // namespace

std::string cell(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string cell(std::size_t value) { return std::to_string(value); }
std::string cell(int value) { return std::to_string(value); }

KinkCertificate certify_kink(const std::function<double(double)>& g, double t_star, double lo, double hi,
                             double step, std::size_t scan, double continuity_step) {
  KinkCertificate k;
  const double g0 = g(t_star);
  const double left0 = (g0 - g(t_star - step)) / step;
  const double left1 = (g(t_star - step) - g(t_star - 2.0 * step)) / step;
  const double right0 = (g(t_star + step) - g0) / step;
  const double right1 = (g(t_star + 2.0 * step) - g(t_star + step)) / step;
  k.left_slope = left0;
  k.right_slope = right0;
  k.mismatch = std::abs(right0 - left0);
  k.smooth_variation = std::max(std::abs(left0 - left1), std::abs(right1 - right0));
  k.kink = k.mismatch > 10.0 * k.smooth_variation;

  double gmin = g0, gmax = g0;
  auto probe = [&](double t) {
    const double a = g(t), b = g(t + continuity_step);
    gmin = std::min({gmin, a, b});
    gmax = std::max({gmax, a, b});
    k.max_jump = std::max(k.max_jump, std::abs(b - a));
  };
  for (std::size_t i = 0; i < scan; ++i) probe(lo + (hi - lo - continuity_step) * static_cast<double>(i) / (scan - 1));
  probe(t_star - 0.5 * continuity_step);
  k.range = gmax - gmin;
  k.continuous = k.max_jump <= 1e-4 * k.range;
  return k;
}

double final_decade_slope(const std::vector<TraceEntry>& trace) {
  if (trace.empty()) return nan();
  const double last = static_cast<double>(trace.back().evaluations);
  std::vector<double> x, y;
  for (const TraceEntry& t : trace)
    if (static_cast<double>(t.evaluations) >= last / 10.0 && t.estimated_error > 0.0) {
      x.push_back(static_cast<double>(t.evaluations));
      y.push_back(t.estimated_error);
    }
  try {
    return fit_loglog(x, y).slope;
  } catch (const Error&) {
    return nan();
  }
}

ExperimentOutput run_experiment(const ExperimentConfig& config, const WorkerPool& pool) {
  const std::string& e = config.experiment;
  if (e == "kink-profile") return kink_profile(config);
  if (e == "fem-rates-1d") return fem_rates(config, pool);
  if (e == "smolyak-degradation") return smolyak_degradation(config, pool);
  if (e == "mlmc-error-work") return mlmc_error_work(config, pool);
  if (e == "mc-vs-mlmc") return mc_vs_mlmc(config, pool);
  if (e == "allocation-table") return allocation_table(config);
  if (e == "mie-probe") return mie_probe(config, pool);
  throw Error(ErrorCode::InvalidArgument, "unknown experiment " + e);
}

void write_outputs(const std::string& dir, const ExperimentConfig& config, const ExperimentOutput& out) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json summary = out.summary;
  summary["version"] = kVersion;
  summary["config"] = to_json(config);
  {
    std::ofstream f(fs::path(dir) / "summary.json");
    f << summary.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / "summary.json").string());
  }
  for (const CsvTable& t : out.tables) {
    std::ofstream f(fs::path(dir) / t.file);
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) f << (i ? "," : "") << cells[i];
      f << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / t.file).string());
  }
}

}  // namespace mlmcuq::experiments
