#ifndef SQO_HARNESS_REPORT_HPP
#define SQO_HARNESS_REPORT_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqo/analysis.hpp"
#include "sqo/errors.hpp"
#include "sqo/harness/config.hpp"
#include "sqo/harness/csv.hpp"

namespace sqo::harness {

/// Heterogeneity constants of a 1-D problem on a grid, with the checks
/// that depend on them.
struct ConstantsReport {
  HeterogeneityConstants het;
  ConstantEstimate c;
  DeltaEstimate Delta;
  double alpha = 0.0;
  bool assumption4_pass = false;
  std::size_t assumption4_failures = 0;
  bool c_ge_4C2 = false;

  nlohmann::json to_json() const {
    using nlohmann::json;
    auto estimate = [](const ConstantEstimate& e) {
      return json{{"value", e.value}, {"attained_at", e.attained_at}, {"excluded", e.excluded}};
    };
    json delta = {{"kind", Delta.kind_name()}};
    delta["value"] = Delta.value ? json(*Delta.value) : json(nullptr);
    return json{{"alpha", alpha},
                {"grid", {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"points", c.grid.points}}},
                {"C1", estimate(het.C1)},
                {"C2", estimate(het.C2)},
                {"c", estimate(c)},
                {"Delta", delta},
                {"violations", het.violations},
                {"assumption4_pass", assumption4_pass},
                {"assumption4_failures", assumption4_failures},
                {"c_ge_4C2", c_ge_4C2}};
  }
};

inline ConstantsReport compute_constants(const FiniteSumProblem& problem, double alpha,
                                         const GridSpec& grid) {
  ConstantsReport r;
  r.alpha = alpha;
  r.het = estimate_C1_C2(problem, grid);
  r.c = estimate_c(problem, alpha, grid);
  const auto pts = grid_points(grid);
  r.Delta = estimate_Delta(problem, pts);
  if (r.het.ok()) {
    const auto rep = check_assumption4(problem, alpha, r.het.C1.value, r.het.C2.value, pts);
    r.assumption4_pass = rep.pass;
    r.assumption4_failures = rep.failures();
  }
  r.c_ge_4C2 = r.het.ok() && r.c.value >= 4.0 * r.het.C2.value * (1.0 - 1e-9);
  return r;
}

/// Bound parameters for one configured algorithm, with the heterogeneity
/// constants estimated on the config grid.
inline BoundParams bound_params(const FiniteSumProblem& problem, const ExperimentConfig& cfg,
                                const AlgoSpec& spec) {
  BoundParams b = BoundParams::from_problem(problem, spec.alpha, cfg.x0);
  if (spec.kind == Algorithm::sgd) return b;
  if (spec.kind != Algorithm::ogq && spec.kind != Algorithm::sgq)
    throw UnsupportedQuery(std::string("no bound is available for ") +
                           std::string(to_string(spec.kind)));
  const auto cr = compute_constants(problem, spec.alpha, cfg.grid_or_default());
  if (!cr.het.ok()) throw InvariantViolation("heterogeneity constants undefined on the grid");
  b.C1 = cr.het.C1.value;
  b.C2 = cr.het.C2.value;
  b.c = cr.c.value;
  if (spec.kind == Algorithm::sgq) {
    b.p = *spec.p;
    if (!cr.Delta.value) throw UnsupportedQuery("Delta is unbounded for this problem");
    b.Delta = *cr.Delta.value;
  }
  return b;
}

/// Bound curve at t = 0..T on the config's record_every schedule.
inline std::vector<BoundRow> bound_curve(const FiniteSumProblem& problem,
                                         const ExperimentConfig& cfg, const AlgoSpec& spec,
                                         BoundMode mode) {
  const BoundParams b = bound_params(problem, cfg, spec);
  std::string note;
  if (spec.kind == Algorithm::sgq) {
    note = bound_sgq(b, 0, mode).note;
  } else if (mode == BoundMode::heuristic && !stepsize_admissible(spec.kind, b).ok) {
    note = "heuristic stepsize";
  }
  std::vector<BoundRow> rows;
  for (std::size_t t = 0; t <= cfg.T; ++t) {
    if (!reported_step(t, cfg.T, cfg.record_every)) continue;
    double v = 0.0;
    switch (spec.kind) {
      case Algorithm::sgd: v = bound_sgd(b, t, mode); break;
      case Algorithm::ogq: v = bound_ogq(b, t, mode); break;
      case Algorithm::sgq: v = bound_sgq(b, t, mode).value; break;
      default: break;
    }
    rows.push_back({spec.label, t, v, note});
  }
  return rows;
}

// Looks an algorithm up by label first, then by kind.
inline const AlgoSpec& find_algo(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& a : cfg.algos)
    if (a.label == name) return a;
  for (const auto& a : cfg.algos)
    if (to_string(a.kind) == name) return a;
  throw InputError("config has no algorithm '" + name + "'");
}

}  // namespace sqo::harness

#endif  // SQO_HARNESS_REPORT_HPP
