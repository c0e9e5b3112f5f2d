#ifndef SQO_HARNESS_EXPERIMENT_HPP
#define SQO_HARNESS_EXPERIMENT_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sqo/errors.hpp"
#include "sqo/harness/config.hpp"
#include "sqo/optimizers.hpp"

namespace sqo::harness {

struct AggregatePoint {
  std::size_t t = 0;
  std::size_t queries = 0;
  double mean_gap = 0.0;
  double std_gap = 0.0;  // population (divide-by-n)
  std::size_t n_trials = 0;
};

/// Mean/std of the gap over surviving trials, one row per reported step.
struct AggregateCurve {
  std::string algo;
  std::vector<AggregatePoint> points;

  // First row whose mean gap is <= level, if any.
  const AggregatePoint* first_below(double level) const {
    for (const auto& p : points)
      if (p.mean_gap <= level) return &p;
    return nullptr;
  }

  const AggregatePoint* at_queries(std::size_t q) const {
    for (const auto& p : points)
      if (p.queries == q) return &p;
    return nullptr;
  }
};

struct AlgoResult {
  AlgoSpec spec;
  AggregateCurve curve;
  std::vector<TrialOutcome> trials;

  std::size_t failures() const {
    std::size_t k = 0;
    for (const auto& r : trials) k += r.ok() ? 0 : 1;
    return k;
  }
};

struct ExperimentResult {
  std::vector<AlgoResult> algos;

  std::vector<AggregateCurve> curves() const {
    std::vector<AggregateCurve> out;
    for (const auto& a : algos) out.push_back(a.curve);
    return out;
  }

  const AlgoResult& find(const std::string& label) const {
    for (const auto& a : algos)
      if (a.spec.label == label) return a;
    throw InputError("no algorithm labelled '" + label + "'");
  }
};

inline bool reported_step(std::size_t t, std::size_t T, std::size_t record_every) {
  return t % record_every == 0 || t == T;
}

/// Aggregates the trials that finished. Rows are the recorded steps with
/// t % record_every == 0, plus t = T.
inline AggregateCurve aggregate(const std::string& label, const std::vector<TrialOutcome>& trials,
                                std::size_t T, std::size_t record_every) {
  if (record_every < 1) throw InputError("record_every must be >= 1");
  AggregateCurve curve;
  curve.algo = label;
  std::vector<const Trajectory*> ok;
  for (const auto& r : trials)
    if (r.ok()) ok.push_back(&*r.trajectory);
  if (ok.empty()) return curve;

  const auto& ref = ok.front()->steps;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const std::size_t t = ref[k].t;
    if (!reported_step(t, T, record_every)) continue;
    AggregatePoint pt;
    pt.t = t;
    pt.queries = ref[k].queries;
    pt.n_trials = ok.size();
    double sum = 0.0;
    for (const auto* tr : ok) {
      const auto& s = tr->steps.at(k);
      if (s.t != t || s.queries != pt.queries)
        throw StateError("trials of '" + label + "' recorded different steps");
      sum += s.gap;
    }
    pt.mean_gap = sum / static_cast<double>(ok.size());
    double ss = 0.0;
    for (const auto* tr : ok) {
      const double d = tr->steps[k].gap - pt.mean_gap;
      ss += d * d;
    }
    pt.std_gap = std::sqrt(ss / static_cast<double>(ok.size()));
    curve.points.push_back(pt);
  }
  return curve;
}

/// Runs every algorithm of the config for `trials` seeded trials and
/// aggregates. All algorithms share the per-trial streams derived from the
/// config seed. `threads` = 0 defers to SQO_THREADS.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0) {
  const FiniteSumProblem problem = cfg.problem.build();
  RunOptions opts;
  opts.diagnostics = cfg.diagnostics;
  ExperimentResult out;
  for (const auto& spec : cfg.algos) {
    AlgoResult r;
    r.spec = spec;
    r.trials = run_many(spec, problem, cfg.x0, cfg.T, cfg.trials, cfg.seed, opts, threads);
    r.curve = aggregate(spec.label, r.trials, cfg.T, cfg.record_every);
    out.algos.push_back(std::move(r));
  }
  return out;
}

}  // namespace sqo::harness

#endif  // SQO_HARNESS_EXPERIMENT_HPP
