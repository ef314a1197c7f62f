#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "mlmcuq/error.hpp"
#include "mlmcuq/model1d.hpp"
#include "mlmcuq/sparse_quad.hpp"

using namespace mlmcuq;

namespace {

// Leja points on a uniform angular grid, ties to the smaller angle.
std::vector<double> brute_force_rleja(std::size_t count, int grid) {
  std::vector<double> angles{0.0}, proj{1.0};
  while (proj.size() < count) {
    int best = -1;
    double best_score = -1e300;
    for (int k = 0; k < grid; ++k) {
      const double t = 2 * std::numbers::pi * k / grid;
      double score = 0.0;
      for (double a : angles) score += std::log(std::abs(std::polar(1.0, t) - std::polar(1.0, a)) + 1e-300);
      if (score > best_score + 1e-13) {
        best_score = score;
        best = k;
      }
    }
    const double t = 2 * std::numbers::pi * best / grid;
    angles.push_back(t);
    double x = std::cos(t);
    if (std::abs(x) < 1e-14) x = 0.0;
    bool seen = false;
    for (double p : proj) seen = seen || std::abs(p - x) < 1e-10;
    if (!seen) proj.push_back(x);
  }
  return proj;
}

Integrand polynomial(std::size_t dim, std::uint32_t seed) {
  // Random polynomial of total degree <= 4 built from a few monomials.
  std::vector<std::pair<double, std::vector<int>>> terms;
  for (std::uint32_t t = 0; t < 6; ++t) {
    const ParamVector u = sample(seed, {0, 0, t, 0}, dim + 1);
    std::vector<int> powers(dim, 0);
    int left = 4;
    for (std::size_t j = 0; j < dim; ++j) {
      powers[j] = static_cast<int>(std::floor((u[j] + 1) / 2 * (left + 1))) % (left + 1);
      left -= powers[j];
    }
    terms.emplace_back(u[dim], powers);
  }
  return [terms](const ParamVector& y) {
    double s = 0.0;
    for (const auto& [c, p] : terms) {
      double m = c;
      for (std::size_t j = 0; j < p.size(); ++j) m *= std::pow(y[j], p[j]);
      s += m;
    }
    return std::vector<double>{s, std::cos(s)};
  };
}

MultiIndexSet random_downward_closed(std::size_t dim, std::size_t size, std::uint32_t seed) {
  MultiIndexSet set(dim);
  for (std::uint32_t k = 0; set.members().size() < size; ++k) {
    const std::vector<MultiIndex> options(set.neighbors().begin(), set.neighbors().end());
    const double u = (sample(seed, {0, 0, k, 0}, 1)[0] + 1) / 2;
    set.insert(options[std::min(options.size() - 1, static_cast<std::size_t>(u * options.size()))]);
  }
  return set;
}

}  // namespace

TEST(RLeja, Examples) {
  EXPECT_EQ(rleja_nodes(1), (std::vector<double>{1.0}));
  EXPECT_EQ(rleja_nodes(3), (std::vector<double>{1.0, -1.0, 0.0}));
  const std::vector<double> full = rleja_nodes(20);
  for (std::size_t n = 1; n <= 20; ++n) {
    const std::vector<double> prefix = rleja_nodes(n);
    ASSERT_EQ(prefix.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(prefix[i], full[i]);
  }
}

TEST(RLeja, MatchesBruteForceOnAngularGrid) {
  const std::vector<double> brute = brute_force_rleja(12, 100000);
  const std::vector<double> ours = rleja_nodes(12);
  for (std::size_t i = 0; i < brute.size(); ++i) EXPECT_NEAR(ours[i], brute[i], 1e-9) << i;
}

TEST(RLeja, LevelRule) {
  EXPECT_EQ(level_rule(0), 1u);
  EXPECT_EQ(level_rule(5), 6u);
  EXPECT_THROW(rleja_weights(kMaxRuleLevel + 1), Error);
}

TEST(RLeja, PolynomialExactness) {
  for (std::size_t m = 0; m <= 40; ++m) {
    const std::vector<double> x = rleja_nodes(level_rule(m));
    const std::vector<double> w = rleja_weights(m);
    for (std::size_t d = 0; d <= m; ++d) {
      double q = 0.0;
      for (std::size_t i = 0; i <= m; ++i) q += w[i] * std::pow(x[i], static_cast<double>(d));
      const double exact = d % 2 == 0 ? 1.0 / (d + 1.0) : 0.0;
      EXPECT_NEAR(q, exact, 1e-12) << "m=" << m << " d=" << d;
    }
  }
}

TEST(MultiIndexSet, AdmissibilityAndClosure) {
  MultiIndexSet set(2);
  EXPECT_TRUE(set.contains({0, 0}));
  EXPECT_EQ(set.neighbors(), (std::set<MultiIndex>{{1, 0}, {0, 1}}));
  EXPECT_FALSE(set.admissible({1, 1}));
  EXPECT_THROW(set.insert({1, 1}), Error);
  set.insert({1, 0});
  set.insert({0, 1});
  EXPECT_TRUE(set.admissible({1, 1}));
  EXPECT_THROW(set.insert({1, 0}), Error);
  set.insert({1, 1});
  EXPECT_TRUE(set.downward_closed());
  EXPECT_EQ(set.neighbors(), (std::set<MultiIndex>{{2, 0}, {0, 2}}));
}

TEST(ApplyDifference, ConstantsAndCounting) {
  LejaRuleTable table;
  EvaluationCache cache([](const ParamVector&) { return std::vector<double>{3.5}; }, 2);
  EXPECT_NEAR(apply_difference({0, 0}, cache, table).contribution[0], 3.5, 1e-12);
  for (MultiIndex nu : {MultiIndex{1, 0}, MultiIndex{0, 2}, MultiIndex{3, 1}, MultiIndex{2, 2}})
    EXPECT_NEAR(apply_difference(nu, cache, table).contribution[0], 0.0, 1e-12);

  LejaRuleTable t2;
  EvaluationCache fresh([](const ParamVector& y) { return std::vector<double>{y[0] + y[1]}; }, 2);
  apply_difference({2, 1}, fresh, t2);
  EXPECT_EQ(fresh.size(), 6u);
}

TEST(ApplyDifference, TelescopesToMoment) {
  LejaRuleTable table;
  EvaluationCache cache([](const ParamVector& y) { return std::vector<double>{y[0] * y[0]}; }, 1);
  double sum = 0.0;
  for (std::uint32_t l = 0; l <= 2; ++l) sum += apply_difference({l}, cache, table).contribution[0];
  EXPECT_NEAR(sum, 1.0 / 3.0, 1e-12);
}

TEST(ApplyDifference, TensorEqualsSumOfDifferences) {
  LejaRuleTable table;
  EvaluationCache cache([](const ParamVector& y) { return std::vector<double>{y[0] * y[1] + std::pow(y[0], 3)}; }, 2);
  double sum = 0.0;
  for (std::uint32_t a = 0; a <= 3; ++a)
    for (std::uint32_t b = 0; b <= 1; ++b) sum += apply_difference({a, b}, cache, table).contribution[0];
  EXPECT_NEAR(tensor_quadrature({3, 1}, cache, table)[0], sum, 1e-12);
}

TEST(CombinationTechnique, ConsistentOnRandomSets) {
  for (std::size_t dim = 1; dim <= 3; ++dim)
    for (std::uint32_t trial = 0; trial < 10; ++trial) {
      const std::uint32_t seed = 100 * static_cast<std::uint32_t>(dim) + trial;
      LejaRuleTable table;
      EvaluationCache cache(polynomial(dim, seed), dim);
      const MultiIndexSet set = random_downward_closed(dim, 12, seed);
      ASSERT_TRUE(set.downward_closed());
      std::vector<double> sum(2, 0.0);
      for (const MultiIndex& nu : set.members()) {
        const SurplusRecord r = apply_difference(nu, cache, table);
        for (std::size_t k = 0; k < 2; ++k) sum[k] += r.contribution[k];
      }
      const std::vector<double> comb = combination_quadrature(set.members(), cache, table);
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(comb[k], sum[k], 1e-12);
    }
}

TEST(Adaptive, SmoothIntegrand) {
  const Integrand f = [](const ParamVector& y) {
    double s = 0.0;
    for (std::size_t j = 0; j < 16; ++j) s += y[j] / ((j + 1.0) * (j + 1.0));
    return std::vector<double>{std::exp(0.1 * s)};
  };
  AdaptiveOptions options;
  options.budget = 1000000;
  options.max_indices = 400;
  options.check_closure = true;
  const AdaptiveResult r = adaptive_integrate(f, 16, options);
  EXPECT_LE(r.trace.back().estimated_error, 1e-4 * r.trace.front().estimated_error);
  double exact = 1.0;
  for (int j = 1; j <= 16; ++j) {
    const double a = 0.1 / (j * j);
    exact *= std::sinh(a) / a;
  }
  EXPECT_NEAR(r.estimate[0], exact, 1e-5);
  EXPECT_EQ(r.evaluations, r.trace.back().evaluations);
  EXPECT_TRUE(r.index_set.downward_closed());
}

TEST(Adaptive, BudgetAndToleranceStops) {
  // The phase keeps the integrand free of exact parity structure, which would
  // hide mixed surpluses from the greedy indicator.
  const Integrand f = [](const ParamVector& y) { return std::vector<double>{std::cos(y[0] + 0.5 * y[1] + 0.3)}; };
  AdaptiveOptions options;
  options.budget = 50;
  const AdaptiveResult a = adaptive_integrate(f, 2, options);
  EXPECT_GE(a.evaluations, 50u);
  EXPECT_LE(a.evaluations, 70u);
  options.budget = 100000;
  options.tolerance = 1e-10;
  const AdaptiveResult b = adaptive_integrate(f, 2, options);
  EXPECT_LE(b.trace.back().estimated_error, 1e-10);
  EXPECT_NEAR(b.estimate[0], std::cos(0.3) * std::sin(1.0) * std::sin(0.5) / 0.5, 1e-10);
  EXPECT_THROW(adaptive_integrate(f, 2, AdaptiveOptions{0}), Error);
}

TEST(Adaptive, KinkedIntegrandConvergesInOneDimension) {
  // Symmetric node sets make every other univariate difference vanish; the
  // loop must step over them instead of stalling.
  Transmission1D p;
  p.kappa2_left = p.kappa2_right = 4.0;
  p.interface_betas = {0.1};
  const std::vector<double> pts{0.45};
  const Integrand f = [&](const ParamVector& y) { return point_qoi(p, y, QoiLevel::exact_solution(), pts); };
  AdaptiveOptions options;
  options.budget = 129;
  const AdaptiveResult r = adaptive_integrate(f, 1, options);
  EXPECT_NEAR(r.estimate[0], exact_mean(p, pts).values[0], 1e-5);
}
