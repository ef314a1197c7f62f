#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlmcuq/error.hpp"
#include "mlmcuq/estimators.hpp"

using namespace mlmcuq;

namespace {

FunctionEvaluator first_coordinate(int max_level = 0) {
  return FunctionEvaluator(
      2, 1, max_level, [](int, const ParamVector& y, std::span<double> out) { out[0] = y[0]; },
      [](int l) { return std::ldexp(1.0, l); });
}

// Q_l(y) = y_1 + 2^{-2l} (1 + y_2): mean difference ~ h^2, variance ~ h^4.
FunctionEvaluator synthetic_hierarchy(int max_level) {
  return FunctionEvaluator(
      2, 1, max_level,
      [](int l, const ParamVector& y, std::span<double> out) { out[0] = y[0] + std::ldexp(1.0 + y[1], -2 * l); },
      [](int l) { return std::ldexp(1.0, l); });
}

Model1DEvaluator model_1d(int max_level, std::vector<double> points = {0.5}) {
  Transmission1D p;
  p.kappa2_left = p.kappa2_right = 4.0;
  p.interface_betas = CoefficientSequence::paired_power_law(0.1, 3.0, 8, 1.0).betas;
  return Model1DEvaluator(p, std::move(points), max_level);
}

double total_cost(const std::vector<std::size_t>& m, std::span<const double> w) {
  double c = 0.0;
  for (std::size_t l = 0; l < m.size(); ++l) c += static_cast<double>(m[l]) * w[l];
  return c;
}

double constraint(const std::vector<std::size_t>& m, std::span<const double> v) {
  double c = 0.0;
  for (std::size_t l = 0; l < m.size(); ++l) c += v[l] / static_cast<double>(m[l]);
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(LevelStatistics, StreamingMatchesTwoPass) {
  LevelStatistics s(0, 2, 1.0);
  std::vector<std::array<double, 2>> raw;
  for (std::uint32_t i = 0; i < 5000; ++i) {
    const ParamVector y = sample(4, {0, 0, i, 0}, 2);
    raw.push_back({1e3 + y[0], y[0] * y[1]});
    s.add(raw.back());
  }
  double var = 0.0;
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (const auto& r : raw) mean += r[c];
    mean /= raw.size();
    double sq = 0.0;
    for (const auto& r : raw) sq += (r[c] - mean) * (r[c] - mean);
    var += sq / (raw.size() - 1);
    EXPECT_NEAR(s.mean_diff[c], mean, 1e-10 * std::abs(mean));
  }
  EXPECT_NEAR(s.var_diff, var, 1e-10 * var);
}

TEST(McEstimate, ConstantAndUniform) {
  const FunctionEvaluator constant(
      1, 1, 0, [](int, const ParamVector&, std::span<double> out) { out[0] = 2.5; }, [](int) { return 3.0; });
  const McResult c = mc_estimate(constant, {1}, 0, 100);
  EXPECT_EQ(c.estimate[0], 2.5);
  EXPECT_EQ(c.variance, 0.0);
  EXPECT_EQ(c.work, 300.0);

  const McResult u = mc_estimate(first_coordinate(), {2}, 0, 100000);
  EXPECT_LE(std::abs(u.estimate[0]), 0.006);
  EXPECT_NEAR(u.variance, 1.0 / 3.0, 0.01);
  EXPECT_EQ(code_of([] { mc_estimate(first_coordinate(), {}, 0, 1); }), ErrorCode::TooFewSamples);
}

TEST(McEstimate, RmseHalvesWithFourTimesSamples) {
  const FunctionEvaluator q = first_coordinate();
  const std::vector<double> ref{0.0};
  auto run = [&](std::size_t m) {
    return rmse_harness([&](std::uint32_t r) { return mc_estimate(q, {9, r, static_cast<std::uint32_t>(m)}, 0, m).estimate; },
                        ref, 200)
        .rmse;
  };
  EXPECT_NEAR(run(1000) / run(4000), 2.0, 0.3);
}

TEST(RmseHarness, ExactAndScaling) {
  const std::vector<double> ref{1.0, 2.0};
  const RmseResult exact = rmse_harness([&](std::uint32_t) { return ref; }, ref, 5);
  EXPECT_EQ(exact.rmse, 0.0);
  EXPECT_EQ(exact.errors.size(), 5u);
  const FunctionEvaluator q = first_coordinate();
  const std::vector<double> zero{0.0};
  auto run = [&](std::size_t m) {
    return rmse_harness([&](std::uint32_t r) { return mc_estimate(q, {10, r, static_cast<std::uint32_t>(m)}, 0, m).estimate; },
                        zero, 200)
        .rmse;
  };
  EXPECT_NEAR(run(500) / run(8000), 4.0, 1.0);
  EXPECT_THROW(rmse_harness([&](std::uint32_t) { return ref; }, ref, 1), Error);
}

TEST(MlmcEstimate, IdenticalLevelsTelescope) {
  const FunctionEvaluator q = first_coordinate(3);
  const std::vector<std::size_t> alloc{1000, 50, 20, 10};
  const MlmcResult r = mlmc_estimate(q, {3}, alloc);
  for (std::size_t l = 1; l < alloc.size(); ++l) {
    EXPECT_LE(std::abs(r.per_level[l].mean_diff[0]), 1e-12);
    EXPECT_LE(r.per_level[l].var_diff, 1e-12);
  }
  EXPECT_EQ(r.estimate[0], r.per_level[0].mean_diff[0]);
}

TEST(MlmcEstimate, LevelZeroIsPlainMc) {
  const FunctionEvaluator q = synthetic_hierarchy(2);
  const std::vector<std::size_t> alloc{777};
  const MlmcResult r = mlmc_estimate(q, {12, 3}, alloc);
  const McResult m = mc_estimate(q, {12, 3}, 0, 777);
  EXPECT_EQ(r.estimate, m.estimate);
  EXPECT_EQ(r.per_level[0].var_diff, m.variance);
  EXPECT_EQ(r.total_work, m.work);
  EXPECT_TRUE(std::isnan(r.bias_estimate));
  EXPECT_EQ(code_of([&] {
              const std::vector<std::size_t> bad{10, 1};
              mlmc_estimate(q, {}, bad);
            }),
            ErrorCode::TooFewSamples);
}

TEST(MlmcEstimate, TelescopingUnbiasedness) {
  // Q_l = Q on every level: MLMC and MC draw different streams but share the mean.
  const FunctionEvaluator q = first_coordinate(2);
  const std::vector<std::size_t> alloc{200, 20, 20};
  std::vector<double> a, b;
  for (std::uint32_t r = 0; r < 100; ++r) {
    a.push_back(mlmc_estimate(q, {21, r}, alloc).estimate[0]);
    b.push_back(mc_estimate(q, {22, r}, 0, 200).estimate[0]);
  }
  auto mean_se = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double sq = 0.0;
    for (double x : v) sq += (x - m) * (x - m);
    return std::pair{m, std::sqrt(sq / (v.size() - 1) / v.size())};
  };
  const auto [ma, sa] = mean_se(a);
  const auto [mb, sb] = mean_se(b);
  EXPECT_LE(std::abs(ma - mb), 4.0 * std::hypot(sa, sb));
}

TEST(MlmcEstimate, DeterministicAcrossWorkerCounts) {
  const Model1DEvaluator q = model_1d(4, {0.3, 0.5});
  const std::vector<std::size_t> alloc{70001, 9000, 1500, 300, 40};
  const MlmcResult serial = mlmc_estimate(q, {5, 1}, alloc);
  for (unsigned w : {2u, 3u, 8u}) {
    const MlmcResult par = mlmc_estimate(q, {5, 1}, alloc, 2.0, WorkerPool(w));
    EXPECT_EQ(serial.estimate, par.estimate);
    for (std::size_t l = 0; l < alloc.size(); ++l) {
      EXPECT_EQ(serial.per_level[l].mean_diff, par.per_level[l].mean_diff);
      EXPECT_EQ(serial.per_level[l].var_diff, par.per_level[l].var_diff);
    }
  }
}

TEST(MlmcEstimate, Model1DWithinErrorEstimate) {
  const Model1DEvaluator q = model_1d(6);
  const ReferenceMean ref = exact_mean(q.problem(), q.points());
  int hits = 0;
  for (std::uint32_t r = 0; r < 10; ++r) {
    const MlmcResult res = adaptive_mlmc(q, {31, r}, 2e-3, 6, 100);
    if (std::abs(res.estimate[0] - ref.values[0]) <= 3.0 * res.total_error_estimate()) ++hits;
  }
  EXPECT_GE(hits, 9);
}

TEST(FitRates, SyntheticPowerLaws) {
  std::vector<LevelStatistics> levels;
  std::vector<double> h;
  for (int l = 0; l <= 5; ++l) {
    h.push_back(std::ldexp(1.0, -l));
    LevelStatistics s(l, 1, 1.0);
    s.samples = 100;
    s.mean_diff = {0.7 * h.back() * h.back()};
    s.var_diff = 0.3 * std::pow(h.back(), 4.0);
    levels.push_back(s);
  }
  const RateEstimate r = fit_rates(levels, h, 1.0);
  EXPECT_NEAR(r.alpha_hat, 2.0, 0.01);
  EXPECT_NEAR(r.beta_hat, 4.0, 0.01);
  EXPECT_EQ(r.gamma, 1.0);

  for (auto& s : levels) s.mean_diff = {0.25};
  EXPECT_EQ(code_of([&] { fit_rates(levels, h, 1.0); }), ErrorCode::FitDegenerate);
  EXPECT_EQ(code_of([&] { fit_rates(std::span(levels).first(2), std::span(h).first(2), 1.0); }),
            ErrorCode::FitDegenerate);
}

TEST(FitRates, Model1DHierarchy) {
  const Model1DEvaluator q = model_1d(6, {0.2});
  const PilotResult pilot = run_pilot(q, {8}, 6, 300);
  EXPECT_NEAR(pilot.rates.alpha_hat, 2.0, 0.5);
  EXPECT_NEAR(pilot.rates.beta_hat, 4.0, 0.5);
}

TEST(AllocateSamples, BruteForceOptimal) {
  const std::vector<double> v{1.0, 1.0 / 16, 1.0 / 256};
  const std::vector<double> w{1.0, 4.0, 16.0};
  const double eps = 0.1;
  const auto m = allocate_samples(eps, v, w);
  EXPECT_LE(constraint(m, v), eps * eps / 2);
  // Continuous optimum 200 * 1.75 * (1, 1/8, 1/64), rounded up.
  EXPECT_EQ(m, (std::vector<std::size_t>{350, 44, 6}));
  const double slack = std::accumulate(w.begin(), w.end(), 0.0);
  EXPECT_LE(total_cost(m, w), 200 * 1.75 * 1.75 + slack);
  double best = total_cost(m, w);
  for (int a = -5; a <= 5; ++a)
    for (int b = -5; b <= 5; ++b)
      for (int c = -5; c <= 5; ++c) {
        const std::vector<std::size_t> t{m[0] + a, m[1] + b, m[2] + c};
        if (std::min({t[0], t[1], t[2]}) < 1) continue;
        if (constraint(t, v) <= eps * eps / 2) best = std::min(best, total_cost(t, w));
      }
  EXPECT_GE(best, total_cost(m, w) - slack);
}

TEST(AllocateSamples, SingleLevelAndZeroVariance) {
  const std::vector<double> v{0.37}, w{5.0};
  EXPECT_EQ(allocate_samples(0.01, v, w)[0], static_cast<std::size_t>(std::ceil(2 * 0.37 / 1e-4)));
  const std::vector<double> z{0.0, 0.0}, w2{1.0, 2.0};
  EXPECT_EQ(allocate_samples(0.1, z, w2), (std::vector<std::size_t>{2, 2}));
}

TEST(AllocateSamples, ConstraintAndScaling) {
  for (std::uint32_t i = 0; i < 200; ++i) {
    const ParamVector u = sample(17, {0, 0, i, 0}, 8);
    std::vector<double> v, w;
    for (std::size_t l = 0; l < 4; ++l) {
      v.push_back(std::pow(10.0, 3 * u[l]));
      w.push_back(std::pow(10.0, 2 * u[l + 4] + 2));
    }
    const double eps = 0.05 + 0.04 * u[0];
    const auto m = allocate_samples(eps, v, w);
    const auto m2 = allocate_samples(eps / 2, v, w);
    EXPECT_LE(constraint(m, v), eps * eps / 2);
    EXPECT_LE(constraint(m2, v), eps * eps / 8);
    for (std::size_t l = 0; l < 4; ++l) EXPECT_GE(m2[l], m[l]);
    // Samples floored at 2 break exact quadrupling; check where all levels are free.
    if (*std::min_element(m.begin(), m.end()) >= 200) {
      const double ratio = total_cost(m2, w) / total_cost(m, w);
      EXPECT_GE(ratio, 3.9);
      EXPECT_LE(ratio, 4.1);
    }
  }
}

TEST(AllocateSamples, TableOneShape) {
  const std::vector<double> dofs{581, 2250, 8855, 35133, 139961, 558705};
  const std::vector<double> reference{1923719, 359729, 64557, 11293, 1943, 331};
  std::vector<double> w;
  for (double n : dofs) w.push_back(16.0 * n);
  const auto v = model_variances(dofs, 2, 2.0, 1.0);
  const auto m = allocate_samples(1e-5, v, w);
  for (std::size_t l = 0; l + 1 < m.size(); ++l) {
    EXPECT_GT(m[l], m[l + 1]);
    const double ours = static_cast<double>(m[l]) / m[l + 1];
    const double theirs = reference[l] / reference[l + 1];
    EXPECT_LE(std::max(ours / theirs, theirs / ours), 2.0);
  }
}

TEST(PredictCostRegime, Cases) {
  const CostPrediction a = predict_cost_regime(2, 4, 1, 1e-3);
  EXPECT_EQ(a.regime, CostRegime::BetaAboveGamma);
  EXPECT_EQ(a.cost_exponent, -2.0);
  const CostPrediction b = predict_cost_regime(2, 4, 2, 1e-3);
  EXPECT_EQ(b.regime, CostRegime::BetaAboveGamma);
  EXPECT_EQ(b.cost_exponent, -2.0);
  const CostPrediction c = predict_cost_regime(1, 1, 2, 1e-3);
  EXPECT_EQ(c.regime, CostRegime::BetaBelowGamma);
  EXPECT_DOUBLE_EQ(c.cost_exponent, -3.0);
  const CostPrediction d = predict_cost_regime(1, 2, 2, 1e-2);
  EXPECT_EQ(d.regime, CostRegime::BetaEqualsGamma);
  EXPECT_TRUE(d.squared_log);
  EXPECT_NEAR(d.predicted_cost, 1e4 * std::pow(std::log(100.0), 2), 1e-6);
  EXPECT_EQ(code_of([] { predict_cost_regime(0.4, 1, 2, 0.1); }), ErrorCode::RateHypothesisViolated);
}

TEST(AdaptiveMlmc, PlanMeetsBiasTarget) {
  const Model1DEvaluator q = model_1d(8);
  const PilotResult pilot = run_pilot(q, {40}, 8, 100);
  const MlmcPlan coarse = plan_mlmc(pilot, 1e-2, 8);
  const MlmcPlan fine = plan_mlmc(pilot, 1e-4, 8);
  EXPECT_LE(coarse.finest_level, fine.finest_level);
  EXPECT_LE(fine.predicted_bias, 1e-4 / std::sqrt(2.0));
  EXPECT_EQ(fine.allocation.size(), static_cast<std::size_t>(fine.finest_level) + 1);
}
