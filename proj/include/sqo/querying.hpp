#ifndef SQO_QUERYING_HPP
#define SQO_QUERYING_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqo/errors.hpp"
#include "sqo/problem.hpp"
#include "sqo/rng.hpp"

namespace sqo {

/// Per-user expected-improvement values together with the two terms they
/// are built from:  ei[i] = alpha * inner[i] - (alpha^2 L / 2) * norm_sq[i].
/// `radius` is filled only for surrogate EI (the staleness bound r_i^t).
struct EIBreakdown {
  std::vector<double> ei;
  std::vector<double> inner;
  std::vector<double> norm_sq;
  std::vector<double> radius;

  std::size_t size() const noexcept { return ei.size(); }
};

/// EI from a set of gradients and their mean: the common kernel of the true
/// and surrogate versions.
inline EIBreakdown ei_from_gradients(std::span<const Vector> grads, const Vector& mean,
                                     double alpha, double L) {
  EIBreakdown out;
  const std::size_t n = grads.size();
  out.ei.resize(n);
  out.inner.resize(n);
  out.norm_sq.resize(n);
  const double curvature = 0.5 * alpha * alpha * L;
  for (std::size_t i = 0; i < n; ++i) {
    out.inner[i] = mean.dot(grads[i]);
    out.norm_sq[i] = grads[i].squaredNorm();
    out.ei[i] = alpha * out.inner[i] - curvature * out.norm_sq[i];
  }
  return out;
}

/// EI_i(x) = alpha <grad f(x), grad f_i(x)> - (alpha^2 L / 2) ||grad f_i(x)||^2
/// using exact gradients (oracle access to every user).
inline EIBreakdown expected_improvement(const FiniteSumProblem& problem, const Vector& x,
                                        double alpha) {
  if (!(alpha > 0.0)) throw InputError("EI needs alpha > 0");
  const auto grads = component_gradients(problem, x);
  return ei_from_gradients(grads, mean_of(grads), alpha, problem.L());
}

/// Latest queried gradient per user, the iteration it was taken at (tau_i)
/// and the iterate it was taken at (the anchor).
///
/// Invariant: gradient(i) == grad f_i(anchor(i)). Single writer; one table
/// per trial.
class SurrogateTable {
 public:
  explicit SurrogateTable(std::size_t n) : slots_(n) {
    if (n == 0) throw InputError("surrogate table needs at least one user");
  }

  /// Queries every user at x0 (n queries) and stamps tau_i = 0.
  static SurrogateTable initialize(const FiniteSumProblem& problem, const Vector& x0) {
    SurrogateTable table(problem.size());
    for (std::size_t i = 0; i < problem.size(); ++i)
      table.record(i, problem.component_gradient(i, x0), 0, x0);
    return table;
  }

  void record(std::size_t i, Vector gradient, std::size_t t, Vector anchor) {
    auto& slot = slots_.at(i);
    if (slot && t < slot->tau)
      throw StateError("surrogate table: timestamps must not go backwards");
    slot = Slot{std::move(gradient), t, std::move(anchor)};
  }

  std::size_t size() const noexcept { return slots_.size(); }

  bool initialized() const noexcept {
    for (const auto& s : slots_)
      if (!s) return false;
    return true;
  }

  const Vector& gradient(std::size_t i) const { return slot(i).gradient; }
  std::size_t tau(std::size_t i) const { return slot(i).tau; }
  const Vector& anchor(std::size_t i) const { return slot(i).anchor; }

  std::vector<Vector> gradients() const {
    require_initialized();
    std::vector<Vector> out;
    out.reserve(size());
    for (const auto& s : slots_) out.push_back(s->gradient);
    return out;
  }

  /// (1/n) sum of stored gradients.
  Vector mean_gradient() const {
    const auto g = gradients();
    return mean_of(g);
  }

  void require_initialized() const {
    if (!initialized())
      throw StateError("surrogate table used before every user was queried");
  }

 private:
  struct Slot {
    Vector gradient;
    std::size_t tau;
    Vector anchor;
  };

  const Slot& slot(std::size_t i) const {
    const auto& s = slots_.at(i);
    if (!s) throw StateError("surrogate table slot " + std::to_string(i) + " is empty");
    return *s;
  }

  std::vector<std::optional<Slot>> slots_;
};

/// Surrogate EI computed from the table alone, no problem queries.
inline EIBreakdown surrogate_expected_improvement(const SurrogateTable& table, double alpha,
                                                  double L) {
  if (!(alpha > 0.0)) throw InputError("surrogate EI needs alpha > 0");
  const auto grads = table.gradients();
  return ei_from_gradients(grads, mean_of(grads), alpha, L);
}

/// Worst-case |EI_i - surrogate EI_i| at current_x:
///   eps_i = L_i ||anchor_i - x||,  eps_bar = mean eps_j,
///   r_i = (alpha ||g~|| + alpha^2 L ||g~_i||) eps_i + alpha ||g~_i|| eps_bar
///         + alpha eps_i eps_bar + (alpha^2 L / 2) eps_i^2
/// where g~ is the mean stored gradient.
inline std::vector<double> error_radius(const SurrogateTable& table, const Vector& current_x,
                                        double alpha, double L,
                                        std::span<const double> smoothness) {
  table.require_initialized();
  const std::size_t n = table.size();
  if (smoothness.size() != n)
    throw InputError("error_radius: one smoothness constant per user required");

  std::vector<double> eps(n);
  double eps_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    eps[i] = smoothness[i] * (table.anchor(i) - current_x).norm();
    eps_bar += eps[i];
  }
  eps_bar /= static_cast<double>(n);

  const double mean_norm = table.mean_gradient().norm();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = table.gradient(i).norm();
    r[i] = (alpha * mean_norm + alpha * alpha * L * gi) * eps[i] + alpha * gi * eps_bar +
           alpha * eps[i] * eps_bar + 0.5 * alpha * alpha * L * eps[i] * eps[i];
  }
  return r;
}

/// Index drawn uniformly from {0, ..., n-1}.
inline std::size_t select_uniform(Rng& rng, std::size_t n) {
  if (n == 0) throw InputError("select_uniform: n must be positive");
  return uniform_index(rng, n);
}

namespace detail {

// Lowest index attaining the maximum; non-finite scores are fatal.
template <typename Score>
std::size_t argmax_lowest(std::size_t n, Score score) {
  if (n == 0) throw InputError("selection over an empty set");
  std::size_t best = 0;
  double best_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = score(i);
    if (!std::isfinite(v))
      throw NumericalError("non-finite selection score at index " + std::to_string(i));
    if (i == 0 || v > best_v) {
      best = i;
      best_v = v;
    }
  }
  return best;
}

}  // namespace detail

/// argmax_i EI_i, ties to the lowest index.
inline std::size_t select_oracle(const EIBreakdown& ei) {
  return detail::argmax_lowest(ei.size(), [&](std::size_t i) { return ei.ei[i]; });
}

/// argmax_i (EI~_i + r_i), ties to the lowest index.
inline std::size_t select_ucb(const EIBreakdown& ei_tilde, std::span<const double> radii) {
  if (radii.size() != ei_tilde.size())
    throw InputError("select_ucb: radii and EI have different lengths");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!std::isfinite(radii[i]))
      throw NumericalError("non-finite radius at index " + std::to_string(i));
  return detail::argmax_lowest(ei_tilde.size(),
                               [&](std::size_t i) { return ei_tilde.ei[i] + radii[i]; });
}

}  // namespace sqo

#endif  // SQO_QUERYING_HPP
