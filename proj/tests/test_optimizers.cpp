#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sqo/optimizers.hpp"

using namespace sqo;

namespace {

FiniteSumProblem toy() { return make_quadratic_family({1, 1, 1, 1}, std::vector<double>{2, 1, -1, -2}); }

Vector v1(double x) { return Vector::Constant(1, x); }

// f_1 of the toy family on its own: (x - 2)^2.
FiniteSumProblem first_component_only() {
  std::vector<ComponentFunction> c{quadratic_component(1.0, v1(2.0))};
  return FiniteSumProblem(std::move(c), 1, 2.0, v1(2.0), 0.0);
}

double mean_gap_at(const std::vector<TrialOutcome>& runs, std::size_t k) {
  double s = 0.0;
  for (const auto& r : runs) s += r.trajectory->steps.at(k).gap;
  return s / static_cast<double>(runs.size());
}

double std_gap_at(const std::vector<TrialOutcome>& runs, std::size_t k) {
  const double m = mean_gap_at(runs, k);
  double s = 0.0;
  for (const auto& r : runs) s += std::pow(r.trajectory->steps.at(k).gap - m, 2);
  return std::sqrt(s / static_cast<double>(runs.size()));
}

AlgoSpec spec(Algorithm kind, double alpha = 0.015) {
  AlgoSpec s;
  s.kind = kind;
  s.alpha = alpha;
  if (kind == Algorithm::sgq) s.p = 0.3;
  if (kind == Algorithm::svrg) s.snapshot_every = 10;
  s.label = std::string(to_string(kind));
  return s;
}

}  // namespace

TEST(Sgd, SingleComponentIsGradientDescent) {
  const auto P = first_component_only();
  Rng rng = make_rng(1);
  const auto tr = run_sgd(P, v1(5), 0.015, 3, rng);
  EXPECT_NEAR(tr.steps[1].x(0), 4.91, 1e-15);
  double x = 5;
  for (int t = 0; t < 3; ++t) x -= 0.015 * 2 * (x - 2);
  EXPECT_NEAR(tr.steps[3].x(0), x, 1e-14);
}

TEST(Sgd, ZeroStepsizeStaysPut) {
  const auto P = toy();
  Rng rng = make_rng(1);
  const auto tr = run_sgd(P, v1(5), 0.0, 50, rng);
  for (const auto& s : tr.steps) {
    EXPECT_EQ(s.x(0), 5.0);
    EXPECT_EQ(s.gap, 25.0);
  }
}

TEST(Sgd, QueryAccounting) {
  const auto P = toy();
  Rng rng = make_rng(2);
  const auto tr = run_sgd(P, v1(5), 0.015, 40, rng);
  EXPECT_EQ(tr.total_queries, 40u);
  ASSERT_EQ(tr.steps.size(), 41u);
  for (const auto& s : tr.steps) EXPECT_EQ(s.queries, s.t);
  EXPECT_FALSE(tr.steps.back().selected);
}

TEST(Sgd, MeanGapDropsBelowOneAndPlateaus) {
  const auto P = toy();
  const auto runs = run_many(spec(Algorithm::sgd), P, v1(5), 3000, 200, 11);
  bool below = false;
  for (std::size_t k = 0; k <= 600; ++k) below = below || mean_gap_at(runs, k) < 1.0;
  EXPECT_TRUE(below);
  // stationary noise floor: E G = 0.00225 / (1 - 0.9409)
  const double floor = 0.00225 / (1.0 - 0.9409);
  const double last = mean_gap_at(runs, 3000);
  EXPECT_GT(last, 1e-2);
  EXPECT_NEAR(last, floor, 0.4 * floor);
}

TEST(Sgd, ExpectedGapMatchesExactRecursion) {
  // For the toy family E[G_{t+1}] = (1 - alpha mu)^2 E[G_t] + alpha^2 sigma*.
  const auto P = toy();
  const auto runs = run_many(spec(Algorithm::sgd), P, v1(5), 200, 2000, 5);
  double g = 25.0;
  for (std::size_t t = 0; t <= 200; t += 1) {
    if (t % 20 == 0) {
      const double se = std_gap_at(runs, t) / std::sqrt(2000.0);
      EXPECT_NEAR(mean_gap_at(runs, t), g, 4 * se + 1e-12) << "t=" << t;
    }
    g = 0.97 * 0.97 * g + 0.015 * 0.015 * 10;
  }
}

TEST(Ogq, FirstStepAndDeterminism) {
  const auto P = toy();
  const auto a = run_ogq(P, v1(5), 0.015, 100);
  EXPECT_EQ(*a.steps[0].selected, 3u);
  EXPECT_NEAR(a.steps[1].x(0), 4.79, 1e-15);
  const auto b = run_ogq(P, v1(5), 0.015, 100);
  for (std::size_t k = 0; k < a.steps.size(); ++k) EXPECT_EQ(a.steps[k].x(0), b.steps[k].x(0));
  EXPECT_EQ(a.total_queries, 100u);
}

TEST(Ogq, IdenticalComponentsGiveGradientDescent) {
  const auto P = make_quadratic_family({1, 1}, std::vector<double>{3, 3});
  const auto tr = run_ogq(P, v1(-1), 0.2, 20);
  double x = -1;
  for (std::size_t t = 0; t <= 20; ++t) {
    EXPECT_NEAR(tr.steps[t].x(0), x, 1e-14);
    EXPECT_EQ(tr.steps[t].selected.value_or(0), 0u);
    x -= 0.2 * 2 * (x - 3);
  }
}

TEST(Ogq, NeedsPositiveStepsize) {
  EXPECT_THROW(run_ogq(toy(), v1(5), 0.0, 10), InputError);
}

TEST(Sgq, QueryAccountingAndExplorationFlags) {
  const auto P = toy();
  Rng rng = make_rng(4);
  const auto tr = run_sgq(P, v1(5), 0.015, 0.3, 500, rng);
  EXPECT_EQ(tr.total_queries, 504u);
  std::size_t explored = 0;
  for (const auto& s : tr.steps) {
    EXPECT_EQ(s.queries, 4 + s.t);
    explored += s.explored ? 1 : 0;
  }
  // Binomial(500, 0.3): mean 150, sd ~10
  EXPECT_NEAR(static_cast<double>(explored), 150.0, 50.0);
}

TEST(Sgq, FirstExploitingStepMatchesOracle) {
  const auto P = toy();
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(seed);
    const auto tr = run_sgq(P, v1(5), 0.015, 0.3, 1, rng);
    if (tr.steps[0].explored) continue;
    EXPECT_EQ(*tr.steps[0].selected, 3u);
    ++checked;
  }
  EXPECT_GT(checked, 20u);
}

TEST(Sgq, FullExplorationFollowsSgdPathwise) {
  const auto P = toy();
  Rng a = make_rng(8), b = make_rng(8);
  const auto sgd = run_sgd(P, v1(5), 0.015, 300, a);
  const auto sgq = run_sgq(P, v1(5), 0.015, 1.0, 300, b);
  for (std::size_t k = 0; k <= 300; ++k) {
    EXPECT_EQ(sgd.steps[k].x(0), sgq.steps[k].x(0));
    EXPECT_TRUE(sgq.steps[k].t == 300 || sgq.steps[k].explored);
  }
}

TEST(Sgq, ObserverSeesEveryStep) {
  const auto P = toy();
  Rng rng = make_rng(3);
  RunOptions opts;
  std::size_t calls = 0;
  opts.sgq_observer = [&](const SgqStepView& v) {
    EXPECT_EQ(v.t, calls);
    EXPECT_EQ(v.radii.size(), 4u);
    ++calls;
  };
  run_sgq(P, v1(5), 0.015, 0.3, 50, rng, opts);
  EXPECT_EQ(calls, 50u);
}

TEST(Sgq, RejectsBadP) {
  Rng rng = make_rng(1);
  EXPECT_THROW(run_sgq(toy(), v1(5), 0.015, 0.0, 10, rng), InputError);
  EXPECT_THROW(run_sgq(toy(), v1(5), 0.015, 1.5, 10, rng), InputError);
}

TEST(Saga, SingleComponentIsGradientDescent) {
  const auto P = first_component_only();
  Rng rng = make_rng(1);
  const auto tr = run_saga(P, v1(5), 0.015, 10, rng);
  double x = 5;
  for (std::size_t t = 0; t <= 10; ++t) {
    EXPECT_NEAR(tr.steps[t].x(0), x, 1e-14);
    x -= 0.015 * 2 * (x - 2);
  }
  EXPECT_EQ(tr.total_queries, 11u);
}

TEST(Saga, FixedPointAtOptimum) {
  Rng rng = make_rng(1);
  const auto tr = run_saga(toy(), v1(0), 0.015, 50, rng);
  for (const auto& s : tr.steps) EXPECT_EQ(s.x(0), 0.0);
}

TEST(Saga, ReachesTolerance) {
  const auto runs = run_many(spec(Algorithm::saga), toy(), v1(5), 3000, 200, 21);
  EXPECT_LE(mean_gap_at(runs, 3000), 1e-3);
  EXPECT_EQ(runs[0].trajectory->steps[0].queries, 4u);
  EXPECT_EQ(runs[0].trajectory->total_queries, 3004u);
}

TEST(Svrg, QueryAccounting) {
  Rng rng = make_rng(1);
  const auto tr = run_svrg(toy(), v1(5), 0.015, 25, 10, rng);
  // snapshots at t = 0, 10, 20
  EXPECT_EQ(tr.total_queries, 25u + 4u * 3u);
  EXPECT_EQ(tr.steps[10].queries, 10u + 4u);
  EXPECT_EQ(tr.steps[11].queries, 11u + 8u);
}

TEST(Svrg, SnapshotEveryStepIsFullGradientDescent) {
  Rng rng = make_rng(2);
  const auto tr = run_svrg(toy(), v1(5), 0.1, 20, 1, rng);
  double x = 5;
  for (std::size_t t = 0; t <= 20; ++t) {
    EXPECT_NEAR(tr.steps[t].x(0), x, 1e-12);
    x -= 0.1 * 2 * x;
  }
}

TEST(Svrg, FixedPointAndTolerance) {
  Rng rng = make_rng(1);
  const auto tr = run_svrg(toy(), v1(0), 0.015, 30, 10, rng);
  for (const auto& s : tr.steps) EXPECT_EQ(s.x(0), 0.0);
  const auto runs = run_many(spec(Algorithm::svrg), toy(), v1(5), 3000, 200, 22);
  EXPECT_LE(mean_gap_at(runs, 3000), 1e-3);
}

TEST(RunMany, OgqTrialsAreIdentical) {
  const auto runs = run_many(spec(Algorithm::ogq), toy(), v1(5), 200, 5, 1);
  for (const auto& r : runs)
    for (std::size_t k = 0; k <= 200; ++k)
      EXPECT_EQ(r.trajectory->steps[k].x(0), runs[0].trajectory->steps[k].x(0));
}

TEST(RunMany, SeedReplayAndThreadIndependence) {
  const auto s = spec(Algorithm::sgq);
  const auto a = run_many(s, toy(), v1(5), 300, 20, 77, {}, 1);
  const auto b = run_many(s, toy(), v1(5), 300, 20, 77, {}, 4);
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_EQ(a[k].trial, k);
    for (std::size_t t = 0; t <= 300; ++t)
      EXPECT_EQ(a[k].trajectory->steps[t].x(0), b[k].trajectory->steps[t].x(0));
  }
  const auto c = run_many(s, toy(), v1(5), 300, 20, 78, {}, 4);
  EXPECT_NE(a[3].trajectory->steps[300].x(0), c[3].trajectory->steps[300].x(0));
}

TEST(RunMany, StandardErrorShrinksWithTrials) {
  const auto s = spec(Algorithm::sgd);
  const auto small = run_many(s, toy(), v1(5), 100, 50, 31);
  const auto large = run_many(s, toy(), v1(5), 100, 200, 32);
  const double se_small = std_gap_at(small, 100) / std::sqrt(50.0);
  const double se_large = std_gap_at(large, 100) / std::sqrt(200.0);
  EXPECT_GT(se_small / se_large, 1.4);
  EXPECT_LT(se_small / se_large, 2.8);
}

TEST(RunMany, DivergenceIsRecordedNotThrown) {
  const auto s = spec(Algorithm::sgd, 2.0);
  Rng rng = make_rng(1);
  EXPECT_THROW(run_sgd(toy(), v1(5), 2.0, 100, rng), DivergenceError);
  const auto runs = run_many(s, toy(), v1(5), 100, 3, 1);
  for (const auto& r : runs) {
    EXPECT_FALSE(r.ok());
    ASSERT_TRUE(r.failed_at);
    EXPECT_GT(*r.failed_at, 0u);
    EXPECT_FALSE(r.failure.empty());
  }
}

TEST(Trajectory, LongRunsAreThinned) {
  RunOptions opts;
  opts.full_record_limit = 2000;
  const auto tr = run_ogq(toy(), v1(5), 0.015, 5000, opts);
  EXPECT_LT(tr.steps.size(), 5001u);
  EXPECT_EQ(tr.steps.back().t, 5000u);
  for (std::size_t t = 0; t <= 1000; ++t) EXPECT_EQ(tr.steps[t].t, t);
  for (std::size_t k = 1; k < tr.steps.size(); ++k) EXPECT_LT(tr.steps[k - 1].t, tr.steps[k].t);
}

TEST(Trajectory, BestSeenGapWithoutOptimum) {
  std::vector<Vector> z{v1(1.0), v1(-2.0), v1(0.5)};
  const auto P = make_logistic_family(z, {1, -1, -1}, 0.1);
  Rng rng = make_rng(1);
  const auto tr = run_sgd(P, v1(3), 0.1, 50, rng);
  EXPECT_EQ(tr.gap_kind, GapKind::best_seen);
  for (const auto& s : tr.steps) EXPECT_GE(s.gap, 0.0);
  EXPECT_EQ(tr.steps[0].gap, 0.0);
}

TEST(AlgoSpec, Validation) {
  AlgoSpec s = spec(Algorithm::sgq);
  EXPECT_TRUE(s.validation_errors().empty());
  s.p = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  s.p.reset();
  EXPECT_EQ(s.validation_errors().size(), 1u);
  AlgoSpec g = spec(Algorithm::sgd);
  g.p = 0.5;
  g.snapshot_every = 3;
  g.alpha = -1;
  EXPECT_EQ(g.validation_errors().size(), 3u);
  EXPECT_EQ(parse_algorithm("svrg"), Algorithm::svrg);
  EXPECT_FALSE(parse_algorithm("adam"));
}

TEST(Diagnostics, SgqRecordsSurrogateAndRadii) {
  RunOptions opts;
  opts.diagnostics = true;
  Rng rng = make_rng(5);
  const auto tr = run_sgq(toy(), v1(5), 0.015, 0.3, 20, rng, opts);
  ASSERT_TRUE(tr.steps[0].diagnostics);
  EXPECT_NEAR(tr.steps[0].diagnostics->ei[3], 2.0559, 1e-12);
  for (double r : tr.steps[0].diagnostics->radius) EXPECT_EQ(r, 0.0);
  EXPECT_FALSE(tr.steps.back().diagnostics);
}
