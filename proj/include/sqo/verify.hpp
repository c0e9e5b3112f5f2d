#ifndef SQO_VERIFY_HPP
#define SQO_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sqo/analysis.hpp"
#include "sqo/optimizers.hpp"
#include "sqo/problem.hpp"
#include "sqo/querying.hpp"
#include "sqo/rng.hpp"

namespace sqo::verify {

struct SuiteResult {
  std::string name;
  bool pass = true;
  bool skipped = false;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string detail;
};

// Inputs shared by the suites. `grid` is only used for scalar problems.
struct Context {
  const FiniteSumProblem& problem;
  Vector x0;
  double alpha = 0.015;
  double p = 0.3;
  std::size_t T = 600;
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  GridSpec grid;
};

namespace detail {

class Tally {
 public:
  explicit Tally(std::string name) { r_.name = std::move(name); }

  void check(bool ok, const std::string& what = {}) {
    ++r_.checks;
    if (!ok) {
      ++r_.failures;
      if (r_.failures <= 3 && !what.empty()) note(what);
    }
  }

  void note(const std::string& s) {
    if (!r_.detail.empty()) r_.detail += "; ";
    r_.detail += s;
  }

  SuiteResult done() {
    r_.pass = r_.failures == 0;
    return r_;
  }

  static SuiteResult skip(std::string name, std::string why) {
    SuiteResult r;
    r.name = std::move(name);
    r.skipped = true;
    r.detail = std::move(why);
    return r;
  }

 private:
  SuiteResult r_;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline Vector random_point(Rng& rng, std::size_t dim, double radius) {
  Vector x(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = radius * (2.0 * uniform01(rng) - 1.0);
  return x;
}

inline double sample_radius(const Context& ctx) { return ctx.x0.lpNorm<Eigen::Infinity>() + 1.0; }

}  // namespace detail

/// Gradients agree with central differences of the values (relative error
/// <= 1e-6, relative to max(1, ||grad||)).
inline SuiteResult gradient_consistency(const Context& ctx, std::size_t points = 100) {
  detail::Tally tally("gradient matches finite differences");
  Rng rng = make_rng(ctx.seed ^ 0x11);
  const auto& P = ctx.problem;
  for (std::size_t s = 0; s < points; ++s) {
    const Vector x = detail::random_point(rng, P.dim(), detail::sample_radius(ctx));
    for (std::size_t i = 0; i < P.size(); ++i) {
      const Vector g = P.component_gradient(i, x);
      Vector fd(g.size());
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(x(k)));
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        fd(k) = (P.component_value(i, xp) - P.component_value(i, xm)) / (xp(k) - xm(k));
      }
      const double err = (fd - g).norm() / std::max(1.0, g.norm());
      tally.check(err <= 1e-6, "component " + std::to_string(i) + " error " + detail::fmt(err));
    }
  }
  return tally.done();
}

/// ||grad f_i(x) - grad f_i(y)|| <= L_i ||x - y|| (1 + 1e-10) on random pairs.
inline SuiteResult smoothness(const Context& ctx, std::size_t pairs = 100) {
  detail::Tally tally("component smoothness");
  Rng rng = make_rng(ctx.seed ^ 0x22);
  const auto& P = ctx.problem;
  const double r = detail::sample_radius(ctx);
  for (std::size_t s = 0; s < pairs; ++s) {
    const Vector x = detail::random_point(rng, P.dim(), r);
    const Vector y = detail::random_point(rng, P.dim(), r);
    for (std::size_t i = 0; i < P.size(); ++i) {
      const double lhs = (P.component_gradient(i, x) - P.component_gradient(i, y)).norm();
      const double rhs = P.smoothness(i) * (x - y).norm() * (1.0 + 1e-10);
      tally.check(lhs <= rhs, "component " + std::to_string(i));
    }
  }
  return tally.done();
}

/// f(x) - inf f <= ||grad f(x)||^2 / (2 mu), and x* is stationary.
inline SuiteResult pl_condition(const Context& ctx, std::size_t points = 200) {
  const auto& P = ctx.problem;
  if (!P.inf_f() || !P.x_star())
    return detail::Tally::skip("PL inequality", "problem has no closed-form optimum");
  detail::Tally tally("PL inequality");
  tally.check(full_gradient(P, *P.x_star()).norm() <= 1e-10, "gradient at x* is not zero");
  Rng rng = make_rng(ctx.seed ^ 0x33);
  for (std::size_t s = 0; s < points; ++s) {
    const Vector x = detail::random_point(rng, P.dim(), detail::sample_radius(ctx));
    const double gap = P.value(x) - *P.inf_f();
    tally.check(gap >= -1e-12, "f below inf f");
    const double rhs = full_gradient(P, x).squaredNorm() / (2.0 * P.mu());
    tally.check(gap <= rhs + 1e-9 * std::max(1.0, rhs), "PL fails at a sample");
  }
  return tally.done();
}

/// Variance transfer at random points.
inline SuiteResult variance_transfer(const Context& ctx, std::size_t points = 1000) {
  const auto& P = ctx.problem;
  if (!P.inf_f() || !P.x_star())
    return detail::Tally::skip("variance transfer", "problem has no closed-form optimum");
  detail::Tally tally("variance transfer");
  Rng rng = make_rng(ctx.seed ^ 0x44);
  std::vector<Vector> xs;
  for (std::size_t s = 0; s < points; ++s)
    xs.push_back(detail::random_point(rng, P.dim(), 2.0 * detail::sample_radius(ctx)));
  const auto rep = check_variance_transfer(P, xs);
  for (const auto& pt : rep.points) tally.check(pt.pass, "lhs " + detail::fmt(pt.lhs) + " > rhs " + detail::fmt(pt.rhs));
  return tally.done();
}

/// f(x_t) - f(x_{t+1}) >= EI_{i_t}(x_t) - 1e-9 for steps along a single
/// component gradient (SGD, OGQ, SGQ), plus the OGQ max-EI improvement.
inline SuiteResult descent_lemma(const Context& ctx, std::size_t total_steps = 10000) {
  detail::Tally tally("descent lemma");
  const auto& P = ctx.problem;
  const std::size_t per_algo = (total_steps + 2) / 3;
  Rng rng = make_rng(ctx.seed ^ 0x55);

  auto check_traj = [&](const Trajectory& tr, bool ogq) {
    for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k) {
      const auto& s = tr.steps[k];
      const auto& nxt = tr.steps[k + 1];
      const auto ei = expected_improvement(P, s.x, ctx.alpha);
      const double gain = P.value(s.x) - P.value(nxt.x);
      tally.check(gain >= ei.ei[*s.selected] - 1e-9,
                  std::string(to_string(tr.algorithm)) + " t=" + std::to_string(s.t));
      if (ogq) {
        const double best = *std::max_element(ei.ei.begin(), ei.ei.end());
        tally.check(gain >= best - 1e-9, "ogq max-EI improvement at t=" + std::to_string(s.t));
      }
    }
  };
  check_traj(run_sgd(P, ctx.x0, ctx.alpha, per_algo, rng), false);
  check_traj(run_ogq(P, ctx.x0, ctx.alpha, per_algo), true);
  check_traj(run_sgq(P, ctx.x0, ctx.alpha, ctx.p, per_algo, rng), false);
  return tally.done();
}

/// Staleness radius bound and UCB regret at every step of an SGQ run, with
/// the true EI computed through oracle access.
inline std::vector<SuiteResult> surrogate_bounds(const Context& ctx) {
  detail::Tally lemma("surrogate EI error within radius");
  detail::Tally regret("UCB regret within 2 r");
  const auto& P = ctx.problem;
  Rng rng = make_rng(ctx.seed ^ 0x66);
  RunOptions opts;
  std::size_t ucb_steps = 0;
  opts.sgq_observer = [&](const SgqStepView& v) {
    const auto ei = expected_improvement(P, v.x, ctx.alpha);
    for (std::size_t i = 0; i < ei.size(); ++i) {
      const double err = std::abs(ei.ei[i] - v.ei_tilde.ei[i]);
      lemma.check(err <= v.radii[i] + 1e-9, "t=" + std::to_string(v.t) + " user " +
                                                std::to_string(i) + " error " + detail::fmt(err) +
                                                " radius " + detail::fmt(v.radii[i]));
    }
    if (!v.explored) {
      ++ucb_steps;
      const double best = *std::max_element(ei.ei.begin(), ei.ei.end());
      regret.check(best - ei.ei[v.selected] <= 2.0 * v.radii[v.selected] + 1e-9,
                   "t=" + std::to_string(v.t));
    }
  };
  run_sgq(P, ctx.x0, ctx.alpha, ctx.p, ctx.T, rng, opts);
  regret.note(std::to_string(ucb_steps) + " UCB steps");
  return {lemma.done(), regret.done()};
}

/// Popoviciu's inequality and the per-point max-minus-mean bound at every
/// grid point (scalar problems) and every OGQ iterate.
inline SuiteResult ei_spread(const Context& ctx) {
  detail::Tally tally("Popoviciu and max-minus-mean bound");
  const auto& P = ctx.problem;
  std::vector<Vector> xs;
  if (P.dim() == 1) xs = grid_points(ctx.grid);
  for (const auto& s : run_ogq(P, ctx.x0, ctx.alpha, ctx.T).steps) xs.push_back(s.x);
  std::size_t degenerate = 0;
  for (const auto& x : xs) {
    const auto ei = expected_improvement(P, x, ctx.alpha);
    const auto s = check_ei_spread(ei.ei);
    tally.check(s.popoviciu_pass, "Popoviciu at x0=" + detail::fmt(x(0)));
    tally.check(s.lemma_pass, "max-minus-mean at x0=" + detail::fmt(x(0)));
    if (s.degenerate) ++degenerate;
  }
  if (degenerate) tally.note(std::to_string(degenerate) + " degenerate points");
  return tally.done();
}

/// Grid-estimated heterogeneity constants: positivity of the skewness
/// factor, the heterogeneity inequality itself, and c >= 4 C2.
inline std::vector<SuiteResult> heterogeneity_constants(const Context& ctx) {
  const auto& P = ctx.problem;
  if (P.dim() != 1)
    return {detail::Tally::skip("heterogeneity inequality", "scalar problems only"),
            detail::Tally::skip("c >= 4 C2", "scalar problems only")};
  detail::Tally a4("heterogeneity inequality");
  detail::Tally cc("c >= 4 C2");
  const auto k = estimate_C1_C2(P, ctx.grid);
  a4.check(k.ok(), k.ok() ? "" : k.violations.front());
  const auto c = estimate_c(P, ctx.alpha, ctx.grid);
  cc.check(c.value >= 4.0 * k.C2.value * (1.0 - 1e-9),
           "c " + detail::fmt(c.value) + " < 4 C2 " + detail::fmt(4.0 * k.C2.value));
  cc.note("c=" + detail::fmt(c.value) + " C2=" + detail::fmt(k.C2.value));
  if (ctx.alpha <= 1.0 / (2.0 * P.L())) {
    const auto rep = check_assumption4(P, ctx.alpha, k.C1.value, k.C2.value, ctx.grid);
    for (const auto& pt : rep.points) a4.check(pt.pass, "fails at x=" + detail::fmt(pt.x(0)));
  } else {
    a4.note("alpha above 1/(2L); inequality not evaluated");
  }
  return {a4.done(), cc.done()};
}

/// SGQ with p = 1 against SGD. Under a shared seed the two runs must agree
/// at every recorded t (the difference and its standard error are both
/// zero). Under independent seeds, the per-trial average gap over the run
/// must agree within 3 standard errors; the per-t maximum |z| is reported.
inline SuiteResult sgq_full_exploration_matches_sgd(const Context& ctx) {
  const auto& P = ctx.problem;
  if (!P.inf_f()) return detail::Tally::skip("SGQ(p=1) matches SGD", "needs inf f");
  detail::Tally tally("SGQ(p=1) matches SGD");
  const std::size_t T = std::min<std::size_t>(ctx.T, 600);
  AlgoSpec sgd{Algorithm::sgd, ctx.alpha, std::nullopt, std::nullopt, "sgd"};
  AlgoSpec sgq{Algorithm::sgq, ctx.alpha, 1.0, std::nullopt, "sgq_p1"};

  auto mean_se = [](const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    for (double g : v) {
      s += g;
      s2 += g * g;
    }
    const double n = static_cast<double>(v.size());
    const double m = s / n;
    return std::pair{m, std::max(0.0, s2 / n - m * m) / n};
  };
  auto gaps_at = [](const std::vector<TrialOutcome>& runs, std::size_t k) {
    std::vector<double> v;
    for (const auto& r : runs)
      if (r.ok()) v.push_back(r.trajectory->steps[k].gap);
    return v;
  };
  auto run_averages = [](const std::vector<TrialOutcome>& runs) {
    std::vector<double> v;
    for (const auto& r : runs) {
      if (!r.ok()) continue;
      double s = 0.0;
      for (const auto& st : r.trajectory->steps) s += st.gap;
      v.push_back(s / static_cast<double>(r.trajectory->steps.size()));
    }
    return v;
  };
  auto zscore = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const auto [ma, va] = mean_se(a);
    const auto [mb, vb] = mean_se(b);
    const double se = std::sqrt(va + vb);
    return se > 0.0 ? std::abs(ma - mb) / se : (ma == mb ? 0.0 : INFINITY);
  };

  const auto a = run_many(sgd, P, ctx.x0, T, ctx.trials, ctx.seed);
  const auto b = run_many(sgq, P, ctx.x0, T, ctx.trials, ctx.seed);
  for (std::size_t k = 0; k <= T; ++k) {
    const double z = zscore(gaps_at(a, k), gaps_at(b, k));
    tally.check(z <= 3.0, "shared seed t=" + std::to_string(k) + " z=" + detail::fmt(z));
  }

  const auto c = run_many(sgd, P, ctx.x0, T, ctx.trials, ctx.seed ^ 0x77);
  const auto d = run_many(sgq, P, ctx.x0, T, ctx.trials, ctx.seed ^ 0x88);
  double worst = 0.0;
  for (std::size_t k = 0; k <= T; ++k) worst = std::max(worst, zscore(gaps_at(c, k), gaps_at(d, k)));
  const double z_avg = zscore(run_averages(c), run_averages(d));
  tally.check(z_avg <= 3.0, "independent seeds: run-average z=" + detail::fmt(z_avg));
  tally.note("independent seeds: run-average z = " + detail::fmt(z_avg) +
             ", max per-t |z| = " + detail::fmt(worst));
  return tally.done();
}

/// tilde_c for i.i.d. EI values: cap n-1 on every sample; sub-gaussian
/// quantile growth consistent with sqrt(log n); bounded case not growing.
inline SuiteResult tilde_c_monte_carlo(std::uint64_t seed, std::size_t trials = 4096) {
  detail::Tally tally("tilde_c Monte-Carlo");
  Rng rng = make_rng(seed ^ 0x99);
  const TildeCDistribution gauss{TildeCDistribution::Kind::gaussian, 1.0};
  const TildeCDistribution unif{TildeCDistribution::Kind::bounded_uniform, 1.0};
  const auto g64 = monte_carlo_tilde_c(gauss, 64, trials, rng);
  const auto g1024 = monte_carlo_tilde_c(gauss, 1024, trials, rng);
  const auto u64 = monte_carlo_tilde_c(unif, 64, trials, rng);
  const auto u1024 = monte_carlo_tilde_c(unif, 1024, trials, rng);
  for (const auto* s : {&g64, &g1024, &u64, &u1024})
    tally.check(s->within_cap, "sample above n-1 at n=" + std::to_string(s->n));
  const double g_ratio = g1024.quantile / g64.quantile;
  const double g_limit = 2.0 * std::sqrt(std::log(1024.0) / std::log(64.0));
  tally.check(g_ratio <= g_limit, "gaussian quantile ratio " + detail::fmt(g_ratio));
  const double u_ratio = std::max(u1024.quantile / u64.quantile, u64.quantile / u1024.quantile);
  tally.check(u_ratio <= 3.0, "bounded quantile ratio " + detail::fmt(u_ratio));
  tally.note("gaussian ratio " + detail::fmt(g_ratio) + " (limit " + detail::fmt(g_limit) +
             "), bounded ratio " + detail::fmt(u_ratio));
  return tally.done();
}

/// Selection rules: shifting every EI by a constant keeps the oracle's
/// choice; the chosen EI is at least the mean.
inline SuiteResult selection_rules(const Context& ctx, std::size_t cases = 2000) {
  detail::Tally tally("selection invariances");
  Rng rng = make_rng(ctx.seed ^ 0xAA);
  const std::size_t n = ctx.problem.size();
  for (std::size_t s = 0; s < cases; ++s) {
    EIBreakdown e;
    e.ei.resize(n);
    for (auto& v : e.ei) v = std::round(8.0 * (2.0 * uniform01(rng) - 1.0)) / 4.0;  // ties likely
    const std::size_t i = select_oracle(e);
    EIBreakdown shifted = e;
    const double shift = std::ldexp(std::round(64.0 * (2.0 * uniform01(rng) - 1.0)), -2);
    for (auto& v : shifted.ei) v += shift;
    tally.check(select_oracle(shifted) == i, "shift changed argmax");
    double mean = 0.0;
    for (double v : e.ei) mean += v;
    mean /= static_cast<double>(n);
    tally.check(e.ei[i] >= mean, "argmax below mean");
  }
  return tally.done();
}

/// Bound structure: SGQ at p = 1 equals SGD bit-for-bit; the OGQ decay factor
/// never exceeds SGD's, with equality exactly when C1 = C2 = 0.
inline SuiteResult bound_structure(const Context& ctx) {
  const auto& P = ctx.problem;
  if (!P.inf_f() || !P.x_star())
    return detail::Tally::skip("bound structure", "needs x* and inf f");
  detail::Tally tally("bound structure");
  BoundParams b = BoundParams::from_problem(P, ctx.alpha, ctx.x0);
  b.p = 1.0;
  b.c = 1.0;
  for (double C1 : {0.0, 0.01, 0.3})
    for (double C2 : {0.0, 0.001, 0.2}) {
      b.C1 = C1;
      b.C2 = C2;
      for (std::size_t t : {0u, 1u, 10u, 100u, 1000u})
        tally.check(bound_sgq(b, t, BoundMode::heuristic).value ==
                        bound_sgd(b, t, BoundMode::heuristic),
                    "p=1 reduction at t=" + std::to_string(t));
      const double sgd_decay = 1.0 - b.alpha * b.mu;
      const double ogq_decay = ogq_decay_factor(b);
      tally.check(ogq_decay <= sgd_decay, "ogq decay above sgd");
      tally.check((ogq_decay == sgd_decay) == (C1 == 0.0 && C2 == 0.0), "equality case");
    }
  return tally.done();
}

/// Closed-form query counts for every algorithm.
inline SuiteResult query_accounting(const Context& ctx) {
  detail::Tally tally("query accounting");
  const auto& P = ctx.problem;
  const std::size_t n = P.size(), T = 97, m = 10;
  Rng rng = make_rng(ctx.seed ^ 0xBB);
  tally.check(run_sgd(P, ctx.x0, ctx.alpha, T, rng).total_queries == T, "sgd");
  tally.check(run_ogq(P, ctx.x0, ctx.alpha, T).total_queries == T, "ogq");
  tally.check(run_sgq(P, ctx.x0, ctx.alpha, ctx.p, T, rng).total_queries == n + T, "sgq");
  tally.check(run_saga(P, ctx.x0, ctx.alpha, T, rng).total_queries == n + T, "saga");
  tally.check(run_svrg(P, ctx.x0, ctx.alpha, T, m, rng).total_queries ==
                  T + n * ((T + m - 1) / m),
              "svrg");
  for (const auto& tr : {run_sgd(P, ctx.x0, ctx.alpha, T, rng), run_sgq(P, ctx.x0, ctx.alpha, ctx.p, T, rng)})
    for (std::size_t k = 1; k < tr.steps.size(); ++k)
      tally.check(tr.steps[k].queries == tr.steps[k - 1].queries + 1, "non-unit increment");
  return tally.done();
}

/// Every suite, in a fixed order.
inline std::vector<SuiteResult> run_all(const Context& ctx) {
  std::vector<SuiteResult> out;
  auto add = [&](SuiteResult r) { out.push_back(std::move(r)); };
  auto add_all = [&](std::vector<SuiteResult> rs) {
    for (auto& r : rs) out.push_back(std::move(r));
  };
  add(gradient_consistency(ctx));
  add(smoothness(ctx));
  add(pl_condition(ctx));
  add(variance_transfer(ctx));
  add(descent_lemma(ctx));
  add_all(surrogate_bounds(ctx));
  add(ei_spread(ctx));
  add_all(heterogeneity_constants(ctx));
  add(sgq_full_exploration_matches_sgd(ctx));
  add(tilde_c_monte_carlo(ctx.seed));
  add(selection_rules(ctx));
  add(bound_structure(ctx));
  add(query_accounting(ctx));
  return out;
}

inline bool all_pass(const std::vector<SuiteResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.pass; });
}

}  // namespace sqo::verify

#endif  // SQO_VERIFY_HPP
