#ifndef SQO_PROBLEM_HPP
#define SQO_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sqo/errors.hpp"

namespace sqo {

using Vector = Eigen::VectorXd;

/// One term f_i of a finite sum, with its exact gradient and Lipschitz
/// constant of that gradient.
struct ComponentFunction {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  double smoothness = 0.0;
};

// Parameters kept alongside a problem so analysis code can use closed forms.
struct QuadraticFamily {
  std::vector<double> a;
  std::vector<Vector> b;
};

struct LogisticFamily {
  std::vector<Vector> features;
  std::vector<double> labels;
  double lambda = 0.0;
};

using FamilyInfo = std::variant<std::monostate, QuadraticFamily, LogisticFamily>;

/// f(x) = (1/n) sum_i f_i(x). Immutable after construction; safe to share
/// across threads for read-only evaluation.
///
/// L and L_max are always derived from the components. x_star / inf_f are
/// optional; problems without them report gaps relative to the best value
/// seen along a trajectory, and bound checks are unavailable.
class FiniteSumProblem {
 public:
  FiniteSumProblem(std::vector<ComponentFunction> components, std::size_t dim,
                   double mu, std::optional<Vector> x_star = std::nullopt,
                   std::optional<double> inf_f = std::nullopt,
                   FamilyInfo family = {})
      : components_(std::move(components)),
        dim_(dim),
        mu_(mu),
        x_star_(std::move(x_star)),
        inf_f_(inf_f),
        family_(std::move(family)) {
    if (components_.empty())
      throw InputError("finite-sum problem needs at least one component");
    if (dim_ == 0) throw InputError("problem dimension must be positive");
    if (!(mu_ > 0.0) || !std::isfinite(mu_))
      throw InputError("PL constant mu must be positive and finite");
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const auto& c = components_[i];
      if (!c.eval || !c.grad)
        throw InputError("component " + std::to_string(i) + " is missing eval/grad");
      if (!(c.smoothness > 0.0) || !std::isfinite(c.smoothness))
        throw InputError("component " + std::to_string(i) +
                         " has non-positive smoothness constant");
    }
    if (x_star_ && static_cast<std::size_t>(x_star_->size()) != dim_)
      throw InputError("x_star dimension does not match problem dimension");
  }

  std::size_t size() const noexcept { return components_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double mu() const noexcept { return mu_; }

  double smoothness(std::size_t i) const { return components_.at(i).smoothness; }

  std::vector<double> smoothness_constants() const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& c : components_) out.push_back(c.smoothness);
    return out;
  }

  // L = (1/n) sum L_i
  double L() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.smoothness;
    return s / static_cast<double>(size());
  }

  double L_max() const {
    double m = 0.0;
    for (const auto& c : components_) m = std::max(m, c.smoothness);
    return m;
  }

  const std::optional<Vector>& x_star() const noexcept { return x_star_; }
  const std::optional<double>& inf_f() const noexcept { return inf_f_; }
  const FamilyInfo& family() const noexcept { return family_; }

  double component_value(std::size_t i, const Vector& x) const {
    check_dim(x);
    return components_.at(i).eval(x);
  }

  Vector component_gradient(std::size_t i, const Vector& x) const {
    check_dim(x);
    return components_.at(i).grad(x);
  }

  double value(const Vector& x) const {
    check_dim(x);
    double s = 0.0;
    for (const auto& c : components_) s += c.eval(x);
    return s / static_cast<double>(size());
  }

  void check_dim(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dim_)
      throw InputError("dimension mismatch: expected " + std::to_string(dim_) +
                       ", got " + std::to_string(x.size()));
  }

 private:
  std::vector<ComponentFunction> components_;
  std::size_t dim_;
  double mu_;
  std::optional<Vector> x_star_;
  std::optional<double> inf_f_;
  FamilyInfo family_;
};

/// All component gradients at x, in index order.
inline std::vector<Vector> component_gradients(const FiniteSumProblem& problem,
                                               const Vector& x) {
  problem.check_dim(x);
  std::vector<Vector> out;
  out.reserve(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i)
    out.push_back(problem.component_gradient(i, x));
  return out;
}

inline Vector mean_of(std::span<const Vector> vs) {
  Vector m = Vector::Zero(vs.front().size());
  for (const auto& v : vs) m += v;
  return m / static_cast<double>(vs.size());
}

/// (1/n) sum_i grad f_i(x).
inline Vector full_gradient(const FiniteSumProblem& problem, const Vector& x) {
  const auto grads = component_gradients(problem, x);
  return mean_of(grads);
}

/// f_i(x) = a ||x - b||^2, L_i = 2a.
inline ComponentFunction quadratic_component(double a, Vector b) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw InputError("quadratic curvature a must be positive");
  ComponentFunction c;
  c.eval = [a, b](const Vector& x) { return a * (x - b).squaredNorm(); };
  c.grad = [a, b](const Vector& x) -> Vector { return 2.0 * a * (x - b); };
  c.smoothness = 2.0 * a;
  return c;
}

/// Family f_i(x) = a_i ||x - b_i||^2 with closed-form x*, inf f and mu.
///
/// The Hessian of f is (2/n) sum a_i * I, so mu = (2/n) sum a_i in every
/// dimension (strong convexity, which implies PL with the same constant).
inline FiniteSumProblem make_quadratic_family(std::vector<double> a,
                                              std::vector<Vector> b) {
  if (a.empty() || b.empty())
    throw InputError("quadratic family: a and b must be non-empty");
  if (a.size() != b.size())
    throw InputError("quadratic family: a and b have different lengths");
  if (a.size() < 2)
    throw InputError("quadratic family: need at least two components");
  const auto dim = static_cast<std::size_t>(b.front().size());
  if (dim == 0) throw InputError("quadratic family: b entries must be non-empty");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0) || !std::isfinite(a[i]))
      throw InputError("quadratic family: a[" + std::to_string(i) + "] must be positive");
    if (static_cast<std::size_t>(b[i].size()) != dim)
      throw InputError("quadratic family: b entries have inconsistent dimensions");
    if (!b[i].allFinite())
      throw InputError("quadratic family: b[" + std::to_string(i) + "] is not finite");
  }

  const double n = static_cast<double>(a.size());
  const double sum_a = std::accumulate(a.begin(), a.end(), 0.0);
  Vector x_star = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < a.size(); ++i) x_star += a[i] * b[i];
  x_star /= sum_a;

  double inf_f = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) inf_f += a[i] * (x_star - b[i]).squaredNorm();
  inf_f /= n;

  std::vector<ComponentFunction> comps;
  comps.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) comps.push_back(quadratic_component(a[i], b[i]));

  const double mu = 2.0 * sum_a / n;
  return FiniteSumProblem(std::move(comps), dim, mu, std::move(x_star), inf_f,
                          QuadraticFamily{std::move(a), std::move(b)});
}

// Scalar convenience overload: d = 1.
inline FiniteSumProblem make_quadratic_family(std::vector<double> a,
                                              const std::vector<double>& b) {
  std::vector<Vector> bv;
  bv.reserve(b.size());
  for (double v : b) bv.push_back(Vector::Constant(1, v));
  return make_quadratic_family(std::move(a), std::move(bv));
}

/// L2-regularized logistic terms
///   f_i(x) = log(1 + exp(-y_i <z_i, x>)) + (lambda/2) ||x||^2,
/// with L_i = ||z_i||^2 / 4 + lambda and mu = lambda. No closed-form x*.
inline FiniteSumProblem make_logistic_family(std::vector<Vector> features,
                                             std::vector<double> labels,
                                             double lambda) {
  if (features.size() < 2)
    throw InputError("logistic family: need at least two components");
  if (features.size() != labels.size())
    throw InputError("logistic family: features and labels have different lengths");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InputError("logistic family: lambda must be positive");
  const auto dim = static_cast<std::size_t>(features.front().size());
  if (dim == 0) throw InputError("logistic family: empty feature vectors");

  std::vector<ComponentFunction> comps;
  comps.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vector z = features[i];
    const double y = labels[i];
    if (static_cast<std::size_t>(z.size()) != dim)
      throw InputError("logistic family: features have inconsistent dimensions");
    if (y != 1.0 && y != -1.0)
      throw InputError("logistic family: labels must be +1 or -1");
    ComponentFunction c;
    c.eval = [z, y, lambda](const Vector& x) {
      const double m = -y * z.dot(x);
      // log1p(exp(m)) without overflow
      const double loss = m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      return loss + 0.5 * lambda * x.squaredNorm();
    };
    c.grad = [z, y, lambda](const Vector& x) -> Vector {
      const double m = -y * z.dot(x);
      const double s = m >= 0.0 ? 1.0 / (1.0 + std::exp(-m))
                                : std::exp(m) / (1.0 + std::exp(m));
      return -y * s * z + lambda * x;
    };
    c.smoothness = 0.25 * z.squaredNorm() + lambda;
    comps.push_back(std::move(c));
  }
  return FiniteSumProblem(std::move(comps), dim, lambda, std::nullopt, std::nullopt,
                          LogisticFamily{std::move(features), std::move(labels), lambda});
}

/// sigma_f* = (1/n) sum ||grad f_i(x*) - grad f(x*)||^2 (population variance).
inline double gradient_noise_at_optimum(const FiniteSumProblem& problem) {
  if (!problem.x_star())
    throw UnsupportedQuery("gradient noise needs a known minimizer x*");
  const auto grads = component_gradients(problem, *problem.x_star());
  const Vector mean = mean_of(grads);
  double s = 0.0;
  for (const auto& g : grads) s += (g - mean).squaredNorm();
  return s / static_cast<double>(grads.size());
}

/// G(x) = f(x) - inf f. Tiny negative values from rounding are clamped to 0;
/// anything below -1e-12 means inf_f is wrong and is reported.
inline double optimality_gap(const FiniteSumProblem& problem, const Vector& x) {
  if (!problem.inf_f())
    throw UnsupportedQuery("optimality gap needs a known inf f");
  const double gap = problem.value(x) - *problem.inf_f();
  if (gap < 0.0) {
    if (gap < -1e-12)
      throw NumericalError("f(x) below inf f by " + std::to_string(-gap));
    return 0.0;
  }
  return gap;
}

}  // namespace sqo

#endif  // SQO_PROBLEM_HPP
