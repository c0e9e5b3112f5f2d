#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sqo/analysis.hpp"

using namespace sqo;

namespace {

FiniteSumProblem toy() { return make_quadratic_family({1, 1, 1, 1}, std::vector<double>{2, 1, -1, -2}); }

Vector v1(double x) { return Vector::Constant(1, x); }

// Toy derivatives are 2x - 2 b_i: variance 10, kurtosis 1.36, no skew.
double toy_C2_at(double x) { return 0.36 * 100.0 / (4.0 * std::pow(10.0 + 4.0 * x * x, 2)); }
double toy_C1_at(double x) { return 10.0 / (16.0 * x * x); }

BoundParams toy_params() {
  const auto P = toy();
  return BoundParams::from_problem(P, 0.015, v1(5));
}

}  // namespace

TEST(Moments, KnownSample) {
  const std::vector<double> v{-4, -2, 2, 4};
  const auto m = population_moments(v);
  EXPECT_DOUBLE_EQ(m.mean, 0.0);
  EXPECT_DOUBLE_EQ(m.variance, 10.0);
  EXPECT_DOUBLE_EQ(m.skewness, 0.0);
  EXPECT_NEAR(m.kurtosis, 1.36, 1e-15);
  const std::vector<double> skewed{0, 0, 0, 4};
  // mean 1, deviations -1,-1,-1,3: m2 = 3, m3 = 6
  EXPECT_NEAR(population_moments(skewed).skewness, 6.0 / std::pow(3.0, 1.5), 1e-15);
  const std::vector<double> flat{2, 2};
  EXPECT_TRUE(std::isnan(population_moments(flat).kurtosis));
  EXPECT_THROW(population_moments(std::vector<double>{}), InputError);
}

TEST(Grid, Values) {
  const auto g = GridSpec{-1, 1, 5}.values();
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  const auto d = GridSpec::around(5);
  EXPECT_EQ(d.lo, -6.0);
  EXPECT_EQ(d.hi, 6.0);
  EXPECT_THROW((GridSpec{1, 0, 3}.values()), InputError);
}

TEST(Heterogeneity, ToyC2OnSymmetricGrid) {
  const auto h = estimate_C1_C2(toy(), GridSpec{-5, 5, 101});
  EXPECT_TRUE(h.ok());
  EXPECT_NEAR(h.C2.value, 9.0 / (110.0 * 110.0), 1e-15);
  EXPECT_NEAR(h.C2.value, 7.438e-4, 1e-7);
  EXPECT_EQ(std::abs(h.C2.attained_at), 5.0);
  // x = 0 is on the grid and has zero mean gradient
  ASSERT_EQ(h.C1.excluded.size(), 1u);
  EXPECT_NEAR(h.C1.excluded[0], 0.0, 1e-12);
}

TEST(Heterogeneity, ToyC1OnPositiveGrid) {
  const auto h = estimate_C1_C2(toy(), GridSpec{1, 5, 41});
  EXPECT_NEAR(h.C1.value, 0.025, 1e-15);
  EXPECT_EQ(h.C1.attained_at, 5.0);
  EXPECT_NEAR(h.C2.value, toy_C2_at(5), 1e-15);
}

TEST(Heterogeneity, MatchesPointwiseFormulaOnAnyGrid) {
  const GridSpec g{-6, 6, 37};
  const auto h = estimate_C1_C2(toy(), g);
  double c1 = INFINITY, c2 = INFINITY;
  for (double x : g.values()) {
    c2 = std::min(c2, toy_C2_at(x));
    if (std::abs(x) > 1e-9) c1 = std::min(c1, toy_C1_at(x));
  }
  EXPECT_NEAR(h.C1.value, c1, 1e-15);
  EXPECT_NEAR(h.C2.value, c2, 1e-15);
}

TEST(Heterogeneity, SkewedFamilyHasDeltaBelowOne) {
  const std::vector<double> b{0, 0, -1, -4};
  const auto P = make_quadratic_family({1, 1, 1, 1}, b);
  const GridSpec grid{2, 3, 3};
  const auto h = estimate_C1_C2(P, grid);
  EXPECT_TRUE(h.ok());
  double c1 = INFINITY, c2 = INFINITY;
  for (double x : grid.values()) {
    std::vector<double> g;
    for (double bi : b) g.push_back(2 * x - 2 * bi);
    const double n = 4, mean = (g[0] + g[1] + g[2] + g[3]) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : g) {
      m2 += std::pow(v - mean, 2) / n;
      m3 += std::pow(v - mean, 3) / n;
      m4 += std::pow(v - mean, 4) / n;
    }
    const double kappa = m4 / (m2 * m2);
    const double delta = 1 - (m3 / std::pow(m2, 1.5)) / std::sqrt(kappa - 1);
    EXPECT_LT(delta, 1.0);
    EXPECT_GT(delta, 0.0);
    c1 = std::min(c1, delta * m2 / (4 * mean * mean));
    c2 = std::min(c2, delta * (kappa - 1) * m2 * m2 / (4 * std::pow(m2 + mean * mean, 2)));
  }
  EXPECT_NEAR(h.C1.value, c1, 1e-14);
  EXPECT_NEAR(h.C2.value, c2, 1e-14);
}

TEST(Heterogeneity, DegenerateFamilyReportsViolation) {
  const auto P = make_quadratic_family({1, 1}, std::vector<double>{3, 3});
  const auto h = estimate_C1_C2(P, GridSpec{-1, 1, 3});
  EXPECT_FALSE(h.ok());
  EXPECT_FALSE(h.violations.empty());
}

TEST(Heterogeneity, RequiresScalarProblem) {
  std::vector<Vector> b{Vector::Zero(2), Vector::Ones(2)};
  EXPECT_THROW(estimate_C1_C2(make_quadratic_family({1, 1}, b), GridSpec{0, 1, 2}), InputError);
}

TEST(TildeC, Formula) {
  const std::size_t n = 6;
  std::vector<double> top(n, 0.0);
  top.back() = 1.0;
  EXPECT_NEAR(tilde_c(top), 1.0 / (n - 1), 1e-15);
  std::vector<double> bottom(n, 1.0);
  bottom.front() = 0.0;
  EXPECT_NEAR(tilde_c(bottom), n - 1.0, 1e-12);
  EXPECT_THROW(tilde_c(std::vector<double>{2, 2, 2}), InputError);
  EXPECT_THROW(tilde_c(std::vector<double>{}), InputError);
}

TEST(TildeC, ToyGridSupremum) {
  const GridSpec g{-6, 6, 401};
  const auto c = estimate_c(toy(), 0.015, g);
  double best = -INFINITY;
  for (double x : g.values()) {
    // EI_i = alpha * 2x * (2x - 2b_i) - alpha^2 (2x - 2b_i)^2
    std::vector<double> ei;
    for (double b : {2.0, 1.0, -1.0, -2.0}) {
      const double gi = 2 * x - 2 * b;
      ei.push_back(0.015 * 2 * x * gi - 0.000225 * gi * gi);
    }
    const double mean = (ei[0] + ei[1] + ei[2] + ei[3]) / 4;
    const auto [lo, hi] = std::minmax_element(ei.begin(), ei.end());
    best = std::max(best, (mean - *lo) / (*hi - mean));
  }
  EXPECT_NEAR(c.value, best, 1e-12);
  EXPECT_GE(c.value, 4 * estimate_C1_C2(toy(), g).C2.value);
}

TEST(Assumption4, HoldsWithEstimatedConstants) {
  const GridSpec g{-6, 6, 401};
  const auto h = estimate_C1_C2(toy(), g);
  const auto rep = check_assumption4(toy(), 0.015, h.C1.value, h.C2.value, g);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.failures(), 0u);
  EXPECT_EQ(rep.points.size(), 401u);
}

TEST(Assumption4, ZeroConstantsAlwaysPass) {
  EXPECT_TRUE(check_assumption4(toy(), 0.015, 0, 0, GridSpec{-3, 3, 11}).pass);
}

TEST(Assumption4, IdenticalComponentsFail) {
  const auto P = make_quadratic_family({1, 1}, std::vector<double>{3, 3});
  const auto rep = check_assumption4(P, 0.015, 0.01, 0.001, GridSpec{0, 1, 3});
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.failures(), 3u);
}

TEST(Assumption4, StepsizeRange) {
  EXPECT_THROW(check_assumption4(toy(), 0.3, 0, 0, GridSpec{0, 1, 2}), InputError);
  EXPECT_THROW(check_assumption4(toy(), 0.0, 0, 0, GridSpec{0, 1, 2}), InputError);
}

TEST(VarianceTransfer, ToyAtFive) {
  const std::vector<Vector> pts{v1(5)};
  const auto rep = check_variance_transfer(toy(), pts);
  EXPECT_TRUE(rep.pass);
  EXPECT_DOUBLE_EQ(rep.points[0].lhs, 110.0);
  EXPECT_DOUBLE_EQ(rep.points[0].rhs, 220.0);
}

TEST(VarianceTransfer, AtOptimumAndSingleComponent) {
  const std::vector<Vector> at_opt{v1(0)};
  const auto rep = check_variance_transfer(toy(), at_opt);
  EXPECT_DOUBLE_EQ(rep.points[0].lhs, 10.0);
  EXPECT_DOUBLE_EQ(rep.points[0].rhs, 20.0);

  std::vector<ComponentFunction> c{quadratic_component(1.5, v1(1.0))};
  FiniteSumProblem one(std::move(c), 1, 3.0, v1(1.0), 0.0);
  std::vector<Vector> pts;
  for (double x = -4; x <= 4; x += 0.5) pts.push_back(v1(x));
  EXPECT_TRUE(check_variance_transfer(one, pts).pass);
}

TEST(Spread, PopoviciuAndLemmaBound) {
  Rng rng = make_rng(12);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> v(2 + k % 9);
    for (auto& x : v) x = standard_normal(rng);
    const auto s = check_ei_spread(v);
    EXPECT_TRUE(s.popoviciu_pass);
    EXPECT_TRUE(s.lemma_pass);
    EXPECT_LE(s.tilde_c, v.size() - 1.0 + 1e-9);
  }
  EXPECT_TRUE(check_ei_spread(std::vector<double>{1, 1}).degenerate);
}

TEST(Bounds, SgdClosedForm) {
  const auto b = toy_params();
  EXPECT_DOUBLE_EQ(b.sigma_star, 10.0);
  EXPECT_DOUBLE_EQ(b.G0, 25.0);
  EXPECT_DOUBLE_EQ(bound_sgd(b, 0), 25.0 + 0.15);
  EXPECT_NEAR(bound_sgd(b, 100000), 0.15, 1e-15);
  EXPECT_NEAR(bound_sgd(b, 10), std::pow(0.97, 10) * 25 + 0.15, 1e-13);
}

TEST(Bounds, SgdUnitContractionNeedsHeuristicMode) {
  auto b = toy_params();
  b.sigma_star = 0.0;
  b.alpha = 0.5;  // alpha mu = 1, above mu/(2 L L_max) = 0.25
  EXPECT_THROW(bound_sgd(b, 1), StepsizeViolation);
  EXPECT_EQ(bound_sgd(b, 1, BoundMode::heuristic), 0.0);
  EXPECT_EQ(bound_sgd(b, 7, BoundMode::heuristic), 0.0);
}

TEST(Bounds, OgqReducesToSgdWithoutHeterogeneity) {
  auto b = toy_params();
  b.c = 1.5;
  for (std::size_t t : {0u, 1u, 50u, 1000u}) EXPECT_DOUBLE_EQ(bound_ogq(b, t), bound_sgd(b, t));
  b.C1 = 0.01;
  EXPECT_LT(ogq_decay_factor(b), 1.0 - b.alpha * b.mu);
  EXPECT_LT(bound_ogq(b, 100), bound_sgd(b, 100));
}

TEST(Bounds, OgqExplicitValue) {
  auto b = toy_params();
  b.C1 = 0.0173611;
  b.C2 = 3.795e-4;
  b.c = 1.564;
  const double rho = 1 - (1 + std::sqrt(2.0) * (std::sqrt(b.C1) + std::sqrt(b.C2)) / std::sqrt(b.c)) * 0.03;
  const double h = std::sqrt(b.c / 2);
  const double floor = 0.15 * (h - std::sqrt(b.C2)) / (h + std::sqrt(b.C1) + std::sqrt(b.C2));
  EXPECT_NEAR(bound_ogq(b, 37), std::pow(rho, 37) * 25 + floor, 1e-12);
}

TEST(Bounds, OgqRejectsSmallC) {
  auto b = toy_params();
  b.C2 = 0.5;
  b.c = 1.0;
  EXPECT_THROW(bound_ogq(b, 1), InvariantViolation);
}

TEST(Bounds, SgqFullExplorationIsSgd) {
  auto b = toy_params();
  b.alpha = 1e-4;
  b.p = 1.0;
  b.C1 = 0.017;
  b.C2 = 3.8e-4;
  b.c = 1.56;
  b.Delta = 4.0;
  for (std::size_t t : {0u, 3u, 500u, 20000u}) {
    const auto s = bound_sgq(b, t);
    EXPECT_EQ(s.value, bound_sgd(b, t));
    EXPECT_EQ(s.delta_term, 0.0);
    EXPECT_EQ(s.note, kSgqExcludedTerm);
  }
}

TEST(Bounds, SgqNoDissimilarityLeavesSigmaTerm) {
  auto b = toy_params();
  b.alpha = 2e-4;
  b.p = 0.3;
  b.C1 = 0.017;
  b.C2 = 3.8e-4;
  b.c = 1.56;
  b.Delta = 0.0;
  const auto s = bound_sgq(b, 1000000);
  EXPECT_EQ(s.delta_term, 0.0);
  EXPECT_NEAR(s.value, s.sigma_term, 1e-15);
  const double r2c = std::sqrt(2 * b.c);
  const double denom = r2c + 0.7 * (2 * std::sqrt(b.C1) + std::sqrt(b.C2));
  EXPECT_NEAR(s.sigma_term, (2e-4 * 2 / 2) * (r2c - 1.4 * std::sqrt(b.C2)) / denom * 10, 1e-15);
}

TEST(Bounds, SgqStrictAndHeuristic) {
  auto b = toy_params();
  b.p = 0.3;
  b.C1 = 0.017;
  b.C2 = 3.8e-4;
  b.c = 1.56;
  b.Delta = 4;
  EXPECT_THROW(bound_sgq(b, 10), StepsizeViolation);
  const auto s = bound_sgq(b, 10, BoundMode::heuristic);
  EXPECT_NE(s.note.find("heuristic"), std::string::npos);
  EXPECT_GT(s.delta_term, 0.0);
}

TEST(Stepsize, ToyThresholds) {
  auto b = toy_params();
  const auto ogq = stepsize_admissible(Algorithm::ogq, b);
  EXPECT_TRUE(ogq.ok);
  EXPECT_DOUBLE_EQ(stepsize_admissible(Algorithm::sgd, b).threshold(), 0.25);

  b.p = 0.3;
  const auto sgq = stepsize_admissible(Algorithm::sgq, b);
  EXPECT_FALSE(sgq.ok);
  const double expected = std::min({(1 - std::sqrt(1 - 0.3 / 8)) / 2, 2.0 / 16, 0.3 / (96 * 4 * 4) / 0.7});
  EXPECT_NEAR(sgq.threshold(), expected, 1e-18);
  EXPECT_NEAR(sgq.threshold(), 2.79e-4, 1e-6);
  bool margin_reported = false;
  for (const auto& c : sgq.conditions)
    if (!c.ok) margin_reported = margin_reported || c.margin < 0;
  EXPECT_TRUE(margin_reported);

  b.alpha = 0.0;
  EXPECT_FALSE(stepsize_admissible(Algorithm::sgd, b).ok);
  EXPECT_FALSE(stepsize_admissible(Algorithm::saga, b).ok);
}

TEST(Delta, ClosedFormsAndUnbounded) {
  const std::vector<Vector> none;
  const auto d = estimate_Delta(toy(), none);
  EXPECT_EQ(d.kind, DeltaEstimate::Kind::exact);
  EXPECT_DOUBLE_EQ(*d.value, 4.0);
  EXPECT_DOUBLE_EQ(*estimate_Delta(make_quadratic_family({1, 1}, std::vector<double>{3, 3}), none).value, 0.0);
  const auto u = estimate_Delta(make_quadratic_family({1, 2}, std::vector<double>{0, 1}), none);
  EXPECT_EQ(u.kind, DeltaEstimate::Kind::unbounded);
  EXPECT_FALSE(u.value);
}

TEST(Delta, SampledLowerEstimate) {
  std::vector<Vector> z{v1(1.0), v1(-2.0)};
  const auto P = make_logistic_family(z, {1, 1}, 0.1);
  std::vector<Vector> pts{v1(0.0), v1(1.0)};
  const auto d = estimate_Delta(P, pts);
  EXPECT_EQ(d.kind, DeltaEstimate::Kind::lower_estimate);
  EXPECT_GT(*d.value, 0.0);
}

TEST(MonteCarlo, QuantileIndex) {
  const std::vector<double> s{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(empirical_quantile(s, 0.9), 9.0);
  EXPECT_EQ(empirical_quantile(s, 0.95), 10.0);
  EXPECT_EQ(empirical_quantile(s, 0.0), 1.0);
}

TEST(MonteCarlo, CapAndGrowth) {
  Rng rng = make_rng(2024);
  TildeCDistribution gauss;
  TildeCDistribution unif{TildeCDistribution::Kind::bounded_uniform, 2.0};
  const auto g64 = monte_carlo_tilde_c(gauss, 64, 2048, rng);
  const auto g1024 = monte_carlo_tilde_c(gauss, 1024, 2048, rng);
  const auto u64 = monte_carlo_tilde_c(unif, 64, 2048, rng);
  const auto u1024 = monte_carlo_tilde_c(unif, 1024, 2048, rng);
  for (const auto* s : {&g64, &g1024, &u64, &u1024}) {
    EXPECT_TRUE(s->within_cap);
    EXPECT_LE(s->max, s->n - 1.0);
    EXPECT_TRUE(std::is_sorted(s->samples.begin(), s->samples.end()));
  }
  EXPECT_LE(g1024.quantile / g64.quantile, 2 * std::sqrt(std::log(1024.0) / std::log(64.0)));
  const double r = u1024.quantile / u64.quantile;
  EXPECT_LE(r, 3.0);
  EXPECT_GE(r, 1.0 / 3.0);
  EXPECT_THROW(monte_carlo_tilde_c(gauss, 1, 10, rng), InputError);
}
