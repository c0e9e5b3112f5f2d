#ifndef SQO_OPTIMIZERS_HPP
#define SQO_OPTIMIZERS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sqo/errors.hpp"
#include "sqo/problem.hpp"
#include "sqo/querying.hpp"
#include "sqo/rng.hpp"

namespace sqo {

enum class Algorithm { sgd, ogq, sgq, saga, svrg };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::ogq: return "ogq";
    case Algorithm::sgq: return "sgq";
    case Algorithm::saga: return "saga";
    case Algorithm::svrg: return "svrg";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::sgd, Algorithm::ogq, Algorithm::sgq, Algorithm::saga,
                 Algorithm::svrg})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

// Charged when nothing else is specified, matching the 10-iteration SVRG
// snapshot of the reference experiment.
inline constexpr std::size_t kDefaultSnapshotEvery = 10;

inline constexpr double kDivergenceGap = 1e12;

struct AlgoSpec {
  Algorithm kind = Algorithm::sgd;
  double alpha = 0.0;
  std::optional<double> p;                    // sgq only
  std::optional<std::size_t> snapshot_every;  // svrg only
  std::string label;

  // Every problem with this spec, empty when valid.
  std::vector<std::string> validation_errors() const {
    std::vector<std::string> out;
    const std::string who = label.empty() ? std::string(to_string(kind)) : label;
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      out.push_back(who + ": alpha must be positive and finite");
    if (kind == Algorithm::sgq) {
      if (!p) out.push_back(who + ": sgq requires p");
      else if (!(*p > 0.0 && *p <= 1.0)) out.push_back(who + ": p must lie in (0, 1]");
    } else if (p) {
      out.push_back(who + ": p only applies to sgq");
    }
    if (kind == Algorithm::svrg) {
      if (snapshot_every && *snapshot_every < 1)
        out.push_back(who + ": snapshot_every must be >= 1");
    } else if (snapshot_every) {
      out.push_back(who + ": snapshot_every only applies to svrg");
    }
    return out;
  }

  void validate() const {
    auto errs = validation_errors();
    if (!errs.empty()) throw ConfigError(std::move(errs));
  }
};

enum class GapKind {
  optimality,  // f(x_t) - inf f
  best_seen,   // f(x_t) - min_{s<=t} f(x_s), for problems without inf f
};

/// State at iteration t. `queries` counts every gradient query issued
/// before x_t's own iteration runs (so it includes initialization and
/// snapshot costs). `selected` is the user queried at iteration t and is
/// absent for the final record.
struct StepRecord {
  std::size_t t = 0;
  Vector x;
  std::optional<std::size_t> selected;
  std::size_t queries = 0;
  double gap = 0.0;
  bool explored = false;
  std::optional<EIBreakdown> diagnostics;
};

struct Trajectory {
  Algorithm algorithm = Algorithm::sgd;
  GapKind gap_kind = GapKind::optimality;
  std::size_t iterations = 0;
  std::size_t total_queries = 0;
  std::vector<StepRecord> steps;
};

/// Everything SGQ computed at one iteration, for observers with oracle
/// access (property checks). `ei_tilde`/`radii` refer to the table before
/// the iteration's query.
struct SgqStepView {
  std::size_t t;
  const Vector& x;
  const SurrogateTable& table;
  const EIBreakdown& ei_tilde;
  const std::vector<double>& radii;
  std::size_t selected;
  bool explored;
};

using SgqObserver = std::function<void(const SgqStepView&)>;

struct RunOptions {
  bool diagnostics = false;
  // Runs up to this length record every iteration; longer ones are thinned
  // geometrically.
  std::size_t full_record_limit = 10000;
  SgqObserver sgq_observer;
};

namespace detail {

class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const FiniteSumProblem& problem, Algorithm algo, std::size_t T,
                    const RunOptions& options)
      : problem_(problem), T_(T), options_(options) {
    traj_.algorithm = algo;
    traj_.iterations = T;
    traj_.gap_kind = problem.inf_f() ? GapKind::optimality : GapKind::best_seen;
  }

  bool wants_diagnostics() const { return options_.diagnostics; }

  // Call once per iteration t = 0..T (t = T without `selected`).
  void visit(std::size_t t, const Vector& x, std::size_t queries,
             std::optional<std::size_t> selected, bool explored = false,
             std::optional<EIBreakdown> diag = std::nullopt) {
    if (!x.allFinite()) throw DivergenceError(t, std::numeric_limits<double>::infinity());
    const double g = gap(x);
    if (!(g <= kDivergenceGap)) throw DivergenceError(t, g);
    if (!should_record(t)) return;
    StepRecord r;
    r.t = t;
    r.x = x;
    r.selected = selected;
    r.queries = queries;
    r.gap = g;
    r.explored = explored;
    r.diagnostics = std::move(diag);
    traj_.steps.push_back(std::move(r));
  }

  Trajectory finish(std::size_t total_queries) {
    traj_.total_queries = total_queries;
    return std::move(traj_);
  }

 private:
  double gap(const Vector& x) {
    if (traj_.gap_kind == GapKind::optimality) return optimality_gap(problem_, x);
    const double v = problem_.value(x);
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    best_ = std::min(best_, v);
    return v - best_;
  }

  bool should_record(std::size_t t) {
    if (T_ <= options_.full_record_limit || t <= 1000 || t == T_) return true;
    if (static_cast<double>(t) >= next_geometric_) {
      while (next_geometric_ <= static_cast<double>(t)) next_geometric_ *= 1.01;
      return true;
    }
    return false;
  }

  const FiniteSumProblem& problem_;
  std::size_t T_;
  const RunOptions& options_;
  Trajectory traj_;
  double best_ = std::numeric_limits<double>::infinity();
  double next_geometric_ = 1000.0;
};

inline void check_start(const FiniteSumProblem& problem, const Vector& x0, double alpha,
                        bool strict_alpha) {
  problem.check_dim(x0);
  if (!std::isfinite(alpha) || alpha < 0.0 || (strict_alpha && alpha == 0.0))
    throw InputError(strict_alpha ? "alpha must be positive" : "alpha must be non-negative");
}

}  // namespace detail

/// x_{t+1} = x_t - alpha grad f_{i_t}(x_t), i_t uniform. One query per step.
inline Trajectory run_sgd(const FiniteSumProblem& problem, const Vector& x0, double alpha,
                          std::size_t T, Rng& rng, const RunOptions& options = {}) {
  detail::check_start(problem, x0, alpha, false);
  detail::TrajectoryBuilder out(problem, Algorithm::sgd, T, options);
  Vector x = x0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t i = select_uniform(rng, problem.size());
    std::optional<EIBreakdown> diag;
    if (out.wants_diagnostics() && alpha > 0.0) diag = expected_improvement(problem, x, alpha);
    out.visit(t, x, t, i, false, std::move(diag));
    x -= alpha * problem.component_gradient(i, x);
  }
  out.visit(T, x, T, std::nullopt);
  return out.finish(T);
}

/// Oracle querying: sees every gradient, steps along the argmax-EI user.
/// Charged one query per iteration (the oracle look-up is free).
inline Trajectory run_ogq(const FiniteSumProblem& problem, const Vector& x0, double alpha,
                          std::size_t T, const RunOptions& options = {}) {
  detail::check_start(problem, x0, alpha, true);
  detail::TrajectoryBuilder out(problem, Algorithm::ogq, T, options);
  const double L = problem.L();
  Vector x = x0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto grads = component_gradients(problem, x);
    EIBreakdown ei = ei_from_gradients(grads, mean_of(grads), alpha, L);
    const std::size_t i = select_oracle(ei);
    std::optional<EIBreakdown> diag;
    if (out.wants_diagnostics()) diag = std::move(ei);
    out.visit(t, x, t, i, false, std::move(diag));
    x -= alpha * grads[i];
  }
  out.visit(T, x, T, std::nullopt);
  return out.finish(T);
}

/// Strategic querying with a surrogate table and UCB selection.
///
/// Per iteration: one uniform draw xi; if xi < p the user is drawn
/// uniformly (a second draw), else argmax of surrogate EI + r_i. With p = 1
/// no xi is drawn, so the index stream is exactly SGD's. The chosen
/// user is queried at x_t, its table slot refreshed, and the fresh gradient
/// applied. Initialization queries all n users at x0.
inline Trajectory run_sgq(const FiniteSumProblem& problem, const Vector& x0, double alpha,
                          double p, std::size_t T, Rng& rng, const RunOptions& options = {}) {
  detail::check_start(problem, x0, alpha, true);
  if (!(p > 0.0 && p <= 1.0)) throw InputError("sgq: p must lie in (0, 1]");
  detail::TrajectoryBuilder out(problem, Algorithm::sgq, T, options);

  const std::size_t n = problem.size();
  const double L = problem.L();
  const auto Li = problem.smoothness_constants();
  SurrogateTable table = SurrogateTable::initialize(problem, x0);
  const bool always_score = options.diagnostics || static_cast<bool>(options.sgq_observer);

  Vector x = x0;
  EIBreakdown ei_tilde;
  std::vector<double> radii;
  for (std::size_t t = 0; t < T; ++t) {
    const bool explored = p >= 1.0 || uniform01(rng) < p;
    if (!explored || always_score) {
      ei_tilde = surrogate_expected_improvement(table, alpha, L);
      radii = error_radius(table, x, alpha, L, Li);
    }
    const std::size_t i = explored ? select_uniform(rng, n) : select_ucb(ei_tilde, radii);

    if (options.sgq_observer)
      options.sgq_observer(SgqStepView{t, x, table, ei_tilde, radii, i, explored});
    std::optional<EIBreakdown> diag;
    if (options.diagnostics) {
      diag = ei_tilde;
      diag->radius = radii;
    }
    out.visit(t, x, n + t, i, explored, std::move(diag));

    Vector g = problem.component_gradient(i, x);
    Vector next = x - alpha * g;
    table.record(i, std::move(g), t, std::move(x));
    x = std::move(next);
  }
  out.visit(T, x, n + T, std::nullopt);
  return out.finish(n + T);
}

/// SAGA: keeps the last gradient seen per user and steps along
///   grad f_i(x_t) - g_i + (1/n) sum_j g_j.
/// The table is filled at x0 (n queries), then one query per step.
inline Trajectory run_saga(const FiniteSumProblem& problem, const Vector& x0, double alpha,
                           std::size_t T, Rng& rng, const RunOptions& options = {}) {
  detail::check_start(problem, x0, alpha, false);
  detail::TrajectoryBuilder out(problem, Algorithm::saga, T, options);
  const std::size_t n = problem.size();
  const double nd = static_cast<double>(n);

  std::vector<Vector> stored = component_gradients(problem, x0);
  Vector sum = Vector::Zero(x0.size());
  for (const auto& g : stored) sum += g;

  Vector x = x0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t i = select_uniform(rng, n);
    std::optional<EIBreakdown> diag;
    if (out.wants_diagnostics() && alpha > 0.0) diag = expected_improvement(problem, x, alpha);
    out.visit(t, x, n + t, i, false, std::move(diag));
    Vector g = problem.component_gradient(i, x);
    x -= alpha * (g - stored[i] + sum / nd);
    sum += g - stored[i];
    stored[i] = std::move(g);
  }
  out.visit(T, x, n + T, std::nullopt);
  return out.finish(n + T);
}

/// SVRG with a snapshot every `snapshot_every` iterations (starting at 0).
/// A snapshot queries all n users and keeps their gradients, so each inner
/// step costs exactly one new query:
///   grad f_i(x_t) - grad f_i(x~) + grad f(x~).
inline Trajectory run_svrg(const FiniteSumProblem& problem, const Vector& x0, double alpha,
                           std::size_t T, std::size_t snapshot_every, Rng& rng,
                           const RunOptions& options = {}) {
  detail::check_start(problem, x0, alpha, false);
  if (snapshot_every < 1) throw InputError("svrg: snapshot_every must be >= 1");
  detail::TrajectoryBuilder out(problem, Algorithm::svrg, T, options);
  const std::size_t n = problem.size();

  std::vector<Vector> snap;
  Vector snap_mean;
  std::size_t queries = 0;
  Vector x = x0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t i = select_uniform(rng, n);
    std::optional<EIBreakdown> diag;
    if (out.wants_diagnostics() && alpha > 0.0) diag = expected_improvement(problem, x, alpha);
    out.visit(t, x, queries, i, false, std::move(diag));
    if (t % snapshot_every == 0) {
      snap = component_gradients(problem, x);
      snap_mean = mean_of(snap);
      queries += n;
    }
    const Vector g = problem.component_gradient(i, x);
    x -= alpha * (g - snap[i] + snap_mean);
    queries += 1;
  }
  out.visit(T, x, queries, std::nullopt);
  return out.finish(queries);
}

/// Dispatch on spec.kind. OGQ ignores the rng.
inline Trajectory run_algorithm(const AlgoSpec& spec, const FiniteSumProblem& problem,
                                const Vector& x0, std::size_t T, Rng& rng,
                                const RunOptions& options = {}) {
  spec.validate();
  switch (spec.kind) {
    case Algorithm::sgd: return run_sgd(problem, x0, spec.alpha, T, rng, options);
    case Algorithm::ogq: return run_ogq(problem, x0, spec.alpha, T, options);
    case Algorithm::sgq: return run_sgq(problem, x0, spec.alpha, *spec.p, T, rng, options);
    case Algorithm::saga: return run_saga(problem, x0, spec.alpha, T, rng, options);
    case Algorithm::svrg:
      return run_svrg(problem, x0, spec.alpha, T,
                      spec.snapshot_every.value_or(kDefaultSnapshotEvery), rng, options);
  }
  throw InputError("unknown algorithm");
}

/// One trial of a batch: a trajectory, or the reason it stopped.
struct TrialOutcome {
  std::size_t trial = 0;
  std::optional<Trajectory> trajectory;
  std::string failure;
  std::optional<std::size_t> failed_at;

  bool ok() const noexcept { return trajectory.has_value(); }
};

/// Worker count from SQO_THREADS (0 or unset = hardware concurrency).
inline std::size_t thread_count_from_env() {
  std::size_t n = 0;
  if (const char* env = std::getenv("SQO_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env) n = static_cast<std::size_t>(v);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs `trials` independent trials. Trial k draws from
/// make_trial_rng(master_seed, k); results come back ordered by k whatever
/// the scheduling. A diverging trial is recorded, not rethrown.
inline std::vector<TrialOutcome> run_many(const AlgoSpec& spec, const FiniteSumProblem& problem,
                                          const Vector& x0, std::size_t T, std::size_t trials,
                                          std::uint64_t master_seed,
                                          const RunOptions& options = {},
                                          std::size_t threads = 0) {
  if (trials < 1) throw InputError("run_many: trials must be >= 1");
  spec.validate();
  problem.check_dim(x0);
  std::vector<TrialOutcome> results(trials);

  auto run_one = [&](std::size_t k) {
    TrialOutcome& r = results[k];
    r.trial = k;
    Rng rng = make_trial_rng(master_seed, k);
    try {
      r.trajectory = run_algorithm(spec, problem, x0, T, rng, options);
    } catch (const DivergenceError& e) {
      r.failure = e.what();
      r.failed_at = e.iteration();
    } catch (const NumericalError& e) {
      r.failure = e.what();
    }
  };

  const std::size_t workers =
      std::min(trials, threads == 0 ? thread_count_from_env() : threads);
  if (workers <= 1 || options.sgq_observer) {
    for (std::size_t k = 0; k < trials; ++k) run_one(k);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < trials; k = next++) run_one(k);
    });
  pool.clear();  // joins
  return results;
}

}  // namespace sqo

#endif  // SQO_OPTIMIZERS_HPP
