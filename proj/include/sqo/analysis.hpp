#ifndef SQO_ANALYSIS_HPP
#define SQO_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sqo/errors.hpp"
#include "sqo/optimizers.hpp"
#include "sqo/problem.hpp"
#include "sqo/querying.hpp"
#include "sqo/rng.hpp"

namespace sqo {

// ---------------------------------------------------------------------------
// Sample statistics
// ---------------------------------------------------------------------------

/// Population (divide-by-n) moments of a sample.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;  // m3 / sigma^3, NaN when variance is 0
  double kurtosis = 0.0;  // m4 / sigma^4, NaN when variance is 0
};

inline Moments population_moments(std::span<const double> v) {
  if (v.empty()) throw InputError("moments of an empty sample");
  const double n = static_cast<double>(v.size());
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
  } else {
    m.skewness = std::numeric_limits<double>::quiet_NaN();
    m.kurtosis = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

inline double population_variance(std::span<const double> v) {
  return population_moments(v).variance;
}

// ---------------------------------------------------------------------------
// Grids and constant estimates
// ---------------------------------------------------------------------------

/// `points` evenly spaced values covering [lo, hi] inclusive.
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 1;

  std::vector<double> values() const {
    if (points == 0) throw InputError("grid needs at least one point");
    if (!(lo <= hi)) throw InputError("grid needs lo <= hi");
    std::vector<double> out(points);
    if (points == 1) {
      out[0] = lo;
      return out;
    }
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) out[k] = lo + step * static_cast<double>(k);
    out.back() = hi;
    return out;
  }

  // Default grid around a start point: [-|x0|-1, |x0|+1] with 401 points.
  static GridSpec around(double x0) {
    const double r = std::abs(x0) + 1.0;
    return GridSpec{-r, r, 401};
  }
};

/// Extremum of a pointwise quantity over a finite grid.
struct ConstantEstimate {
  double value = 0.0;
  GridSpec grid;
  double attained_at = 0.0;
  std::vector<double> excluded;  // grid points where the expression is undefined
};

struct HeterogeneityConstants {
  ConstantEstimate C1;
  ConstantEstimate C2;
  // Grid points where the gradient set is degenerate (kurtosis 1, zero
  // variance) or the skewness/kurtosis factor is not positive.
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

namespace detail {

inline double scalar_of(const Vector& v) { return v(0); }

inline std::vector<double> derivatives_at(const FiniteSumProblem& problem, double x) {
  const Vector xv = Vector::Constant(1, x);
  std::vector<double> g(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i)
    g[i] = scalar_of(problem.component_gradient(i, xv));
  return g;
}

inline void require_scalar(const FiniteSumProblem& problem, const char* what) {
  if (problem.dim() != 1)
    throw InputError(std::string(what) + " is only defined for scalar problems (d = 1)");
}

}  // namespace detail

/// Heterogeneity constants from the moments of {f_i'(x)} on a grid:
///   delta(x) = 1 - S_g / sqrt(kappa_g - 1)
///   C1 = inf delta V_g / (4 gbar^2)
///   C2 = inf delta (kappa_g - 1) V_g^2 / (4 (V_g + gbar^2)^2)
/// Points with gbar = 0 are left out of the C1 infimum (recorded in
/// C1.excluded).
inline HeterogeneityConstants estimate_C1_C2(const FiniteSumProblem& problem,
                                             const GridSpec& grid) {
  detail::require_scalar(problem, "C1/C2 estimation");
  HeterogeneityConstants out;
  out.C1.grid = out.C2.grid = grid;
  out.C1.value = out.C2.value = std::numeric_limits<double>::infinity();
  bool any_c1 = false, any_c2 = false;

  for (double x : grid.values()) {
    const auto g = detail::derivatives_at(problem, x);
    const Moments m = population_moments(g);
    double scale = 0.0;
    for (double v : g) scale = std::max(scale, std::abs(v));

    if (!(m.variance > 0.0) || !(m.kurtosis - 1.0 > 1e-12)) {
      out.violations.push_back("degenerate gradient set (kurtosis 1) at x = " +
                               std::to_string(x));
      continue;
    }
    const double delta = 1.0 - m.skewness / std::sqrt(m.kurtosis - 1.0);
    if (!(delta > 0.0)) {
      out.violations.push_back("non-positive skewness factor at x = " + std::to_string(x));
      continue;
    }

    const double g2 = m.mean * m.mean;
    const double c2 = delta * (m.kurtosis - 1.0) * m.variance * m.variance /
                      (4.0 * (m.variance + g2) * (m.variance + g2));
    if (c2 < out.C2.value) {
      out.C2.value = c2;
      out.C2.attained_at = x;
    }
    any_c2 = true;

    if (std::abs(m.mean) <= 1e-12 * scale) {
      out.C1.excluded.push_back(x);
      continue;
    }
    const double c1 = delta * m.variance / (4.0 * g2);
    if (c1 < out.C1.value) {
      out.C1.value = c1;
      out.C1.attained_at = x;
    }
    any_c1 = true;
  }
  if (!any_c1) out.violations.push_back("no grid point admits a C1 value");
  if (!any_c2) out.violations.push_back("no grid point admits a C2 value");
  return out;
}

/// (mean - min) / (max - mean) of an EI vector.
inline double tilde_c(std::span<const double> ei) {
  if (ei.empty()) throw InputError("tilde_c of an empty vector");
  const auto [lo, hi] = std::minmax_element(ei.begin(), ei.end());
  const double mean = std::accumulate(ei.begin(), ei.end(), 0.0) / static_cast<double>(ei.size());
  const double spread = *hi - *lo;
  const double scale = std::max(std::abs(*hi), std::abs(*lo));
  if (!(spread > 1e-14 * scale) || !(*hi > mean))
    throw InputError("tilde_c is undefined when every value is equal (max = mean)");
  return (mean - *lo) / (*hi - mean);
}

/// Grid supremum of tilde_c(EI(x)); degenerate points are skipped and listed.
inline ConstantEstimate estimate_c(const FiniteSumProblem& problem, double alpha,
                                   const GridSpec& grid) {
  detail::require_scalar(problem, "c estimation");
  ConstantEstimate out;
  out.grid = grid;
  out.value = -std::numeric_limits<double>::infinity();
  for (double x : grid.values()) {
    const auto ei = expected_improvement(problem, Vector::Constant(1, x), alpha);
    try {
      const double v = tilde_c(ei.ei);
      if (v > out.value) {
        out.value = v;
        out.attained_at = x;
      }
    } catch (const InputError&) {
      out.excluded.push_back(x);
    }
  }
  if (!std::isfinite(out.value)) throw InputError("tilde_c undefined at every grid point");
  return out;
}

// ---------------------------------------------------------------------------
// Inequality checkers. Failures are data, not exceptions.
// ---------------------------------------------------------------------------

struct InequalityPoint {
  Vector x;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct InequalityReport {
  std::vector<InequalityPoint> points;
  bool pass = true;

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.pass; }));
  }
};

/// Var[EI_i(x)] >= C1 alpha^2 ||grad f||^4 + C2 alpha^4 L^2 (mean ||grad f_i||^2)^2
/// at every point, with 1e-9 relative slack.
inline InequalityReport check_assumption4(const FiniteSumProblem& problem, double alpha,
                                          double C1, double C2,
                                          std::span<const Vector> points) {
  const double L = problem.L();
  if (!(alpha > 0.0) || alpha > 1.0 / (2.0 * L))
    throw InputError("heterogeneity check needs 0 < alpha <= 1/(2L)");
  InequalityReport rep;
  for (const auto& x : points) {
    const auto grads = component_gradients(problem, x);
    const Vector mean = mean_of(grads);
    const auto ei = ei_from_gradients(grads, mean, alpha, L);
    double msq = 0.0;
    for (double v : ei.norm_sq) msq += v;
    msq /= static_cast<double>(grads.size());
    const double gn2 = mean.squaredNorm();

    InequalityPoint pt;
    pt.x = x;
    pt.lhs = population_variance(ei.ei);
    pt.rhs = C1 * alpha * alpha * gn2 * gn2 + C2 * std::pow(alpha, 4) * L * L * msq * msq;
    pt.pass = pt.lhs >= pt.rhs * (1.0 - 1e-9);
    rep.pass = rep.pass && pt.pass;
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

inline std::vector<Vector> grid_points(const GridSpec& grid) {
  std::vector<Vector> out;
  for (double x : grid.values()) out.push_back(Vector::Constant(1, x));
  return out;
}

inline InequalityReport check_assumption4(const FiniteSumProblem& problem, double alpha,
                                          double C1, double C2, const GridSpec& grid) {
  detail::require_scalar(problem, "grid heterogeneity check");
  const auto pts = grid_points(grid);
  return check_assumption4(problem, alpha, C1, C2, pts);
}

/// (1/n) sum ||grad f_i(x)||^2 <= 4 L_max (f(x) - inf f) + 2 sigma_f*, 1e-9 absolute slack.
inline InequalityReport check_variance_transfer(const FiniteSumProblem& problem,
                                                std::span<const Vector> samples) {
  if (!problem.inf_f() || !problem.x_star())
    throw UnsupportedQuery("variance transfer needs x* and inf f");
  const double sigma = gradient_noise_at_optimum(problem);
  const double Lmax = problem.L_max();
  InequalityReport rep;
  for (const auto& x : samples) {
    const auto grads = component_gradients(problem, x);
    double msq = 0.0;
    for (const auto& g : grads) msq += g.squaredNorm();
    msq /= static_cast<double>(grads.size());
    InequalityPoint pt;
    pt.x = x;
    pt.lhs = msq;
    pt.rhs = 4.0 * Lmax * (problem.value(x) - *problem.inf_f()) + 2.0 * sigma;
    pt.pass = pt.lhs <= pt.rhs + 1e-9;
    rep.pass = rep.pass && pt.pass;
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

/// Popoviciu's variance inequality and the max-minus-mean lower bound it
/// yields, at one EI vector.
struct SpreadCheck {
  double variance = 0.0;
  double popoviciu_bound = 0.0;  // (max - mean)(mean - min)
  double max_minus_mean = 0.0;
  double tilde_c = 0.0;
  double lemma_bound = 0.0;  // sqrt(variance / tilde_c)
  bool popoviciu_pass = false;
  bool lemma_pass = false;
  bool degenerate = false;
};

inline SpreadCheck check_ei_spread(std::span<const double> ei, double c_global = 0.0) {
  SpreadCheck s;
  const auto [lo, hi] = std::minmax_element(ei.begin(), ei.end());
  const double mean = std::accumulate(ei.begin(), ei.end(), 0.0) / static_cast<double>(ei.size());
  s.variance = population_variance(ei);
  s.max_minus_mean = *hi - mean;
  s.popoviciu_bound = (*hi - mean) * (mean - *lo);
  s.popoviciu_pass = s.variance <= s.popoviciu_bound + 1e-12;
  try {
    s.tilde_c = sqo::tilde_c(ei);
  } catch (const InputError&) {
    s.degenerate = true;
    s.lemma_pass = true;
    return s;
  }
  const double c = std::max(s.tilde_c, c_global);
  s.lemma_bound = std::sqrt(s.variance / c);
  s.lemma_pass = s.max_minus_mean >= s.lemma_bound - 1e-12;
  return s;
}

// ---------------------------------------------------------------------------
// Closed-form bound curves
// ---------------------------------------------------------------------------

/// Constants feeding the bound curves.
struct BoundParams {
  double alpha = 0.0;
  double mu = 0.0;
  double L = 0.0;
  double L_max = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double c = 1.0;
  double Delta = 0.0;
  double p = 1.0;
  double sigma_star = 0.0;
  double G0 = 0.0;
  std::size_t n = 1;

  // Problem-derived fields; heterogeneity constants stay at their defaults.
  static BoundParams from_problem(const FiniteSumProblem& problem, double alpha,
                                  const Vector& x0) {
    BoundParams b;
    b.alpha = alpha;
    b.mu = problem.mu();
    b.L = problem.L();
    b.L_max = problem.L_max();
    b.sigma_star = gradient_noise_at_optimum(problem);
    b.G0 = optimality_gap(problem, x0);
    b.n = problem.size();
    return b;
  }

  void require_finite() const {
    for (double v : {alpha, mu, L, L_max, C1, C2, c, Delta, p, sigma_star, G0})
      if (!std::isfinite(v)) throw InputError("bound parameters must be finite");
    if (!(mu > 0.0 && L > 0.0 && L_max > 0.0)) throw InputError("mu, L, L_max must be positive");
    if (C1 < 0.0 || C2 < 0.0 || Delta < 0.0 || sigma_star < 0.0 || G0 < 0.0)
      throw InputError("C1, C2, Delta, sigma*, G0 must be non-negative");
    if (n < 1) throw InputError("n must be positive");
  }

  void require_heterogeneity() const {
    if (!(c > 0.0)) throw InputError("c must be positive");
    if (c < 4.0 * C2 * (1.0 - 1e-9))
      throw InvariantViolation("c = " + std::to_string(c) + " is below 4 C2 = " +
                               std::to_string(4.0 * C2));
  }
};

enum class BoundMode {
  strict,     // inadmissible stepsize is an error
  heuristic,  // evaluate the formula anyway
};

struct StepsizeCondition {
  std::string name;
  double threshold = 0.0;
  double margin = 0.0;  // threshold - alpha (for positivity: alpha itself)
  bool ok = false;
};

struct StepsizeReport {
  std::vector<StepsizeCondition> conditions;
  bool ok = true;

  // Tightest upper threshold on alpha.
  double threshold() const {
    double t = std::numeric_limits<double>::infinity();
    for (const auto& c : conditions)
      if (c.name != "alpha > 0") t = std::min(t, c.threshold);
    return t;
  }
};

/// Per-condition evaluation of the stepsize requirements of each analysis.
/// sgd/ogq: alpha <= mu/(2 L L_max) (ogq also alpha <= 1/(2L) for the
/// heterogeneity bound); sgq: the three-way minimum; saga/svrg: positivity.
inline StepsizeReport stepsize_admissible(Algorithm algo, const BoundParams& b) {
  StepsizeReport rep;
  auto add_upper = [&](std::string name, double threshold) {
    rep.conditions.push_back({std::move(name), threshold, threshold - b.alpha,
                              b.alpha <= threshold});
  };
  rep.conditions.push_back({"alpha > 0", 0.0, b.alpha, b.alpha > 0.0});

  const double nd = static_cast<double>(b.n);
  switch (algo) {
    case Algorithm::sgd:
      add_upper("alpha <= mu/(2 L L_max)", b.mu / (2.0 * b.L * b.L_max));
      break;
    case Algorithm::ogq:
      add_upper("alpha <= mu/(2 L L_max)", b.mu / (2.0 * b.L * b.L_max));
      add_upper("alpha <= 1/(2 L)", 1.0 / (2.0 * b.L));
      break;
    case Algorithm::sgq:
      add_upper("alpha <= (1 - sqrt(1 - p/(2n)))/L_max",
                (1.0 - std::sqrt(1.0 - b.p / (2.0 * nd))) / b.L_max);
      add_upper("alpha <= mu/(4 L L_max)", b.mu / (4.0 * b.L * b.L_max));
      add_upper("alpha <= p/(96 n (L + L_max) (1 - p))",
                b.p >= 1.0 ? std::numeric_limits<double>::infinity()
                           : b.p / (96.0 * nd * (b.L + b.L_max)) / (1.0 - b.p));
      add_upper("alpha <= 1/(2 L)", 1.0 / (2.0 * b.L));
      break;
    case Algorithm::saga:
    case Algorithm::svrg:
      break;
  }
  for (const auto& c : rep.conditions) rep.ok = rep.ok && c.ok;
  return rep;
}

namespace detail {

inline void require_admissible(Algorithm algo, const BoundParams& b, BoundMode mode) {
  if (mode == BoundMode::heuristic) return;
  const auto rep = stepsize_admissible(algo, b);
  if (rep.ok) return;
  std::string msg = std::string(to_string(algo)) + " bound: inadmissible stepsize";
  for (const auto& c : rep.conditions)
    if (!c.ok) msg += "; violates " + c.name + " (margin " + std::to_string(c.margin) + ")";
  throw StepsizeViolation(msg);
}

}  // namespace detail

/// (1 - alpha mu)^t G0 + (alpha L / mu) sigma*
inline double bound_sgd(const BoundParams& b, std::size_t t, BoundMode mode = BoundMode::strict) {
  b.require_finite();
  detail::require_admissible(Algorithm::sgd, b, mode);
  const double decay = 1.0 - b.alpha * b.mu;
  return std::pow(decay, static_cast<double>(t)) * b.G0 + (b.alpha * b.L / b.mu) * b.sigma_star;
}

inline double ogq_decay_factor(const BoundParams& b) {
  const double factor = 1.0 + std::sqrt(2.0) * (std::sqrt(b.C1) + std::sqrt(b.C2)) / std::sqrt(b.c);
  return 1.0 - factor * b.alpha * b.mu;
}

/// [1 - (1 + sqrt2 (sqrt C1 + sqrt C2)/sqrt c) alpha mu]^t G0
///   + (alpha L/mu) (sqrt(c/2) - sqrt C2)/(sqrt(c/2) + sqrt C1 + sqrt C2) sigma*
inline double bound_ogq(const BoundParams& b, std::size_t t, BoundMode mode = BoundMode::strict) {
  b.require_finite();
  b.require_heterogeneity();
  detail::require_admissible(Algorithm::ogq, b, mode);
  const double half_c = std::sqrt(b.c / 2.0);
  const double ratio =
      (half_c - std::sqrt(b.C2)) / (half_c + std::sqrt(b.C1) + std::sqrt(b.C2));
  return std::pow(ogq_decay_factor(b), static_cast<double>(t)) * b.G0 +
         (b.alpha * b.L / b.mu) * ratio * b.sigma_star;
}

inline constexpr const char* kSgqExcludedTerm = "excluded O((1-p)alpha^2) term";

/// The explicit terms of the SGQ bound. The O((1-p) alpha^2) remainder has
/// no computable constant and is never included.
struct SgqBound {
  double value = 0.0;
  double decay_term = 0.0;
  double delta_term = 0.0;
  double sigma_term = 0.0;
  std::string note = kSgqExcludedTerm;
};

inline double sgq_decay_factor(const BoundParams& b) {
  const double q = 1.0 - b.p;
  const double factor =
      1.0 + q * (2.0 * std::sqrt(b.C1) + std::sqrt(b.C2)) / std::sqrt(2.0 * b.c);
  return 1.0 - factor * b.alpha * b.mu;
}

inline SgqBound bound_sgq(const BoundParams& b, std::size_t t, BoundMode mode = BoundMode::strict) {
  b.require_finite();
  b.require_heterogeneity();
  if (!(b.p > 0.0 && b.p <= 1.0)) throw InputError("sgq bound needs p in (0, 1]");
  detail::require_admissible(Algorithm::sgq, b, mode);

  const double q = 1.0 - b.p;
  const double root2c = std::sqrt(2.0 * b.c);
  const double denom = root2c + q * (2.0 * std::sqrt(b.C1) + std::sqrt(b.C2));
  const double nd = static_cast<double>(b.n);

  SgqBound out;
  out.decay_term = std::pow(sgq_decay_factor(b), static_cast<double>(t)) * b.G0;
  out.delta_term = 24.0 * b.alpha * (b.L + b.L_max) * nd / (b.p * b.mu) * (q * root2c / denom) *
                   (b.Delta * b.Delta);
  out.sigma_term =
      (b.alpha * b.L / b.mu) * ((root2c - 2.0 * q * std::sqrt(b.C2)) / denom) * b.sigma_star;
  out.value = out.decay_term + out.delta_term + out.sigma_term;
  if (mode == BoundMode::heuristic && !stepsize_admissible(Algorithm::sgq, b).ok)
    out.note += "; heuristic stepsize";
  return out;
}

// ---------------------------------------------------------------------------
// Gradient dissimilarity
// ---------------------------------------------------------------------------

struct DeltaEstimate {
  enum class Kind { exact, lower_estimate, unbounded };
  Kind kind = Kind::exact;
  std::optional<double> value;

  std::string_view kind_name() const {
    switch (kind) {
      case Kind::exact: return "exact";
      case Kind::lower_estimate: return "lower_estimate";
      case Kind::unbounded: return "unbounded";
    }
    return "?";
  }
};

/// sup_x max_i ||grad f_i(x) - grad f(x)||. Closed form for equal-curvature
/// quadratics (2a max ||b_i - bbar||); unbounded for mixed curvatures;
/// otherwise a sampled maximum, which can only under-estimate.
inline DeltaEstimate estimate_Delta(const FiniteSumProblem& problem,
                                    std::span<const Vector> samples) {
  if (const auto* q = std::get_if<QuadraticFamily>(&problem.family())) {
    const double a0 = q->a.front();
    const bool equal = std::all_of(q->a.begin(), q->a.end(), [&](double a) { return a == a0; });
    if (!equal) return {DeltaEstimate::Kind::unbounded, std::nullopt};
    const Vector bbar = mean_of(q->b);
    double m = 0.0;
    for (const auto& bi : q->b) m = std::max(m, (bi - bbar).norm());
    return {DeltaEstimate::Kind::exact, 2.0 * a0 * m};
  }
  double m = 0.0;
  for (const auto& x : samples) {
    const auto grads = component_gradients(problem, x);
    const Vector mean = mean_of(grads);
    for (const auto& g : grads) m = std::max(m, (g - mean).norm());
  }
  return {DeltaEstimate::Kind::lower_estimate, m};
}

// ---------------------------------------------------------------------------
// Monte-Carlo behaviour of tilde_c for i.i.d. EI values
// ---------------------------------------------------------------------------

struct TildeCDistribution {
  enum class Kind { gaussian, bounded_uniform };
  Kind kind = Kind::gaussian;
  double scale = 1.0;  // sigma for gaussian, B for uniform[-B, B]

  double draw(Rng& rng) const {
    if (kind == Kind::gaussian) return scale * standard_normal(rng);
    return scale * (2.0 * uniform01(rng) - 1.0);
  }
};

struct TildeCSummary {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::vector<double> samples;  // sorted ascending
  double quantile = 0.0;        // empirical (1 - 1/n)-quantile
  double max = 0.0;
  bool within_cap = true;  // every sample <= n - 1
};

inline double empirical_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  const double pos = std::ceil(q * static_cast<double>(sorted.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(sorted.size())));
  return sorted[idx - 1];
}

inline TildeCSummary monte_carlo_tilde_c(const TildeCDistribution& dist, std::size_t n,
                                         std::size_t trials, Rng& rng) {
  if (n < 2) throw InputError("tilde_c Monte-Carlo needs n >= 2");
  if (trials < 1) throw InputError("tilde_c Monte-Carlo needs trials >= 1");
  TildeCSummary s;
  s.n = n;
  s.trials = trials;
  s.samples.reserve(trials);
  std::vector<double> ei(n);
  const double cap = static_cast<double>(n - 1);
  while (s.samples.size() < trials) {
    for (auto& v : ei) v = dist.draw(rng);
    double tc;
    try {
      tc = tilde_c(ei);
    } catch (const InputError&) {
      continue;  // all-equal draw, probability zero for these distributions
    }
    s.within_cap = s.within_cap && tc <= cap * (1.0 + 1e-12);
    s.samples.push_back(tc);
  }
  std::sort(s.samples.begin(), s.samples.end());
  s.max = s.samples.back();
  s.quantile = empirical_quantile(s.samples, 1.0 - 1.0 / static_cast<double>(n));
  return s;
}

}  // namespace sqo

#endif  // SQO_ANALYSIS_HPP
