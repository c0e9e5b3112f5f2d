#ifndef SQO_HARNESS_CONFIG_HPP
#define SQO_HARNESS_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqo/analysis.hpp"
#include "sqo/errors.hpp"
#include "sqo/harness/format.hpp"
#include "sqo/optimizers.hpp"
#include "sqo/problem.hpp"

namespace sqo::harness {

using nlohmann::json;

/// Problem description as written in the config file.
///   {"type": "quadratic", "a": [...], "b": [...]}            b scalars (d = 1) or arrays
///   {"type": "logistic", "features": [[...]], "labels": [...], "lambda": ...}
struct ProblemSpec {
  std::string type;
  std::vector<double> a;
  std::vector<Vector> b;
  std::vector<Vector> features;
  std::vector<double> labels;
  double lambda = 0.0;

  FiniteSumProblem build() const {
    if (type == "quadratic") return make_quadratic_family(a, b);
    if (type == "logistic") return make_logistic_family(features, labels, lambda);
    throw InputError("unknown problem type '" + type + "'");
  }
};

struct ExperimentConfig {
  ProblemSpec problem;
  Vector x0;
  double alpha = 0.0;
  std::size_t T = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<AlgoSpec> algos;
  std::size_t record_every = 1;
  std::string out_dir = "out";
  bool diagnostics = false;
  std::optional<GridSpec> grid;

  GridSpec grid_or_default() const {
    return grid ? *grid : GridSpec::around(x0.lpNorm<Eigen::Infinity>());
  }
};

namespace detail {

// Collects every problem found while walking the document.
class Issues {
 public:
  void add(std::string s) { list_.push_back(std::move(s)); }
  bool empty() const { return list_.empty(); }
  std::vector<std::string> take() { return std::move(list_); }

 private:
  std::vector<std::string> list_;
};

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed, Issues& issues) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) issues.add(where + it.key() + ": unknown key");
  }
}

inline std::optional<double> get_number(const json& obj, const std::string& key,
                                        const std::string& where, Issues& issues,
                                        bool required) {
  if (!obj.contains(key)) {
    if (required) issues.add(where + key + ": missing");
    return std::nullopt;
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    issues.add(where + key + ": must be a number");
    return std::nullopt;
  }
  return v.get<double>();
}

inline std::optional<std::uint64_t> get_count(const json& obj, const std::string& key,
                                              const std::string& where, Issues& issues,
                                              bool required) {
  if (!obj.contains(key)) {
    if (required) issues.add(where + key + ": missing");
    return std::nullopt;
  }
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    issues.add(where + key + ": must be non-negative");
    return std::nullopt;
  }
  issues.add(where + key + ": must be an integer");
  return std::nullopt;
}

inline std::optional<Vector> get_point(const json& v, const std::string& where, Issues& issues) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  if (v.is_array() && !v.empty()) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) {
        issues.add(where + ": entries must be numbers");
        return std::nullopt;
      }
      out(static_cast<Eigen::Index>(k)) = v[k].get<double>();
    }
    return out;
  }
  issues.add(where + ": must be a number or a non-empty array of numbers");
  return std::nullopt;
}

inline ProblemSpec parse_problem(const json& j, Issues& issues) {
  ProblemSpec spec;
  if (!j.is_object()) {
    issues.add("problem: must be an object");
    return spec;
  }
  if (!j.contains("type") || !j.at("type").is_string()) {
    issues.add("problem.type: missing or not a string");
    return spec;
  }
  spec.type = j.at("type").get<std::string>();
  if (spec.type == "quadratic") {
    reject_unknown(j, "problem.", {"type", "a", "b"}, issues);
    if (!j.contains("a") || !j.at("a").is_array()) {
      issues.add("problem.a: missing or not an array");
    } else {
      for (std::size_t k = 0; k < j.at("a").size(); ++k) {
        const auto& v = j.at("a")[k];
        if (!v.is_number()) issues.add("problem.a[" + std::to_string(k) + "]: must be a number");
        else if (!(v.get<double>() > 0.0)) issues.add("problem.a[" + std::to_string(k) + "]: must be positive");
        else spec.a.push_back(v.get<double>());
      }
    }
    if (!j.contains("b") || !j.at("b").is_array()) {
      issues.add("problem.b: missing or not an array");
    } else {
      for (std::size_t k = 0; k < j.at("b").size(); ++k)
        if (auto p = get_point(j.at("b")[k], "problem.b[" + std::to_string(k) + "]", issues))
          spec.b.push_back(*p);
    }
    if (j.contains("a") && j.contains("b") && j.at("a").is_array() && j.at("b").is_array()) {
      if (j.at("a").size() != j.at("b").size()) issues.add("problem: a and b differ in length");
      if (j.at("a").size() < 2) issues.add("problem.a: need at least two components");
    }
    for (std::size_t k = 1; k < spec.b.size(); ++k)
      if (spec.b[k].size() != spec.b[0].size()) {
        issues.add("problem.b: entries have different dimensions");
        break;
      }
  } else if (spec.type == "logistic") {
    reject_unknown(j, "problem.", {"type", "features", "labels", "lambda"}, issues);
    if (auto l = get_number(j, "lambda", "problem.", issues, true)) {
      if (!(*l > 0.0)) issues.add("problem.lambda: must be positive");
      spec.lambda = *l;
    }
    if (!j.contains("features") || !j.at("features").is_array()) {
      issues.add("problem.features: missing or not an array");
    } else {
      for (std::size_t k = 0; k < j.at("features").size(); ++k)
        if (auto p = get_point(j.at("features")[k], "problem.features[" + std::to_string(k) + "]", issues))
          spec.features.push_back(*p);
    }
    if (!j.contains("labels") || !j.at("labels").is_array()) {
      issues.add("problem.labels: missing or not an array");
    } else {
      for (std::size_t k = 0; k < j.at("labels").size(); ++k) {
        const auto& v = j.at("labels")[k];
        if (!v.is_number() || (v.get<double>() != 1.0 && v.get<double>() != -1.0))
          issues.add("problem.labels[" + std::to_string(k) + "]: must be +1 or -1");
        else spec.labels.push_back(v.get<double>());
      }
    }
    if (spec.features.size() != spec.labels.size())
      issues.add("problem: features and labels differ in length");
  } else {
    issues.add("problem.type: unknown type '" + spec.type + "'");
  }
  return spec;
}

inline std::string default_label(const AlgoSpec& a) {
  if (a.kind == Algorithm::sgq && a.p) return "sgq_p" + format_double(*a.p);
  return std::string(to_string(a.kind));
}

inline std::optional<AlgoSpec> parse_algo(const json& j, std::size_t idx, double alpha,
                                          Issues& issues) {
  const std::string where = "algos[" + std::to_string(idx) + "].";
  if (!j.is_object()) {
    issues.add("algos[" + std::to_string(idx) + "]: must be an object");
    return std::nullopt;
  }
  reject_unknown(j, where, {"kind", "alpha", "p", "snapshot_every", "label"}, issues);
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    issues.add(where + "kind: missing or not a string");
    return std::nullopt;
  }
  const auto kind = parse_algorithm(j.at("kind").get<std::string>());
  if (!kind) {
    issues.add(where + "kind: unknown algorithm '" + j.at("kind").get<std::string>() + "'");
    return std::nullopt;
  }
  AlgoSpec a;
  a.kind = *kind;
  a.alpha = get_number(j, "alpha", where, issues, false).value_or(alpha);
  a.p = get_number(j, "p", where, issues, false);
  if (auto m = get_count(j, "snapshot_every", where, issues, false)) a.snapshot_every = *m;
  if (a.kind == Algorithm::svrg && !a.snapshot_every) a.snapshot_every = kDefaultSnapshotEvery;
  if (j.contains("label")) {
    if (!j.at("label").is_string() || j.at("label").get<std::string>().empty())
      issues.add(where + "label: must be a non-empty string");
    else a.label = j.at("label").get<std::string>();
  }
  if (a.label.find_first_of(",\"\n") != std::string::npos)
    issues.add(where + "label: must not contain commas, quotes or newlines");
  if (j.contains("alpha") && !(a.alpha > 0.0)) issues.add(where + "alpha: must be positive");
  if (a.kind == Algorithm::sgq) {
    if (!a.p) issues.add(where + "p: required for sgq");
    else if (!(*a.p > 0.0 && *a.p <= 1.0)) issues.add(where + "p: must lie in (0, 1]");
  } else if (a.p) {
    issues.add(where + "p: only applies to sgq");
  }
  if (a.kind == Algorithm::svrg) {
    if (*a.snapshot_every < 1) issues.add(where + "snapshot_every: must be >= 1");
  } else if (a.snapshot_every) {
    issues.add(where + "snapshot_every: only applies to svrg");
  }
  if (a.label.empty()) a.label = default_label(a);
  return a;
}

inline std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Parses and validates a config document. Unknown keys are errors; every
/// violation found is reported in one ConfigError.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "config") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({source + ": parse error at " + detail::position_of(text, e.byte) + ": " +
                       e.what()});
  }
  detail::Issues issues;
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError({source + ": top level must be an object"});

  detail::reject_unknown(j, "", {"problem", "x0", "alpha", "T", "trials", "seed", "algos",
                                 "record_every", "out_dir", "diagnostics", "grid"},
                         issues);

  if (j.contains("problem")) cfg.problem = detail::parse_problem(j.at("problem"), issues);
  else issues.add("problem: missing");

  if (j.contains("x0")) {
    if (auto p = detail::get_point(j.at("x0"), "x0", issues)) cfg.x0 = *p;
  } else {
    issues.add("x0: missing");
  }

  if (auto a = detail::get_number(j, "alpha", "", issues, true)) {
    cfg.alpha = *a;
    if (!(cfg.alpha > 0.0)) issues.add("alpha: must be positive");
  }
  if (auto t = detail::get_count(j, "T", "", issues, true)) {
    cfg.T = *t;
    if (cfg.T < 1) issues.add("T: must be >= 1");
  }
  if (auto n = detail::get_count(j, "trials", "", issues, true)) {
    cfg.trials = *n;
    if (cfg.trials < 1) issues.add("trials: must be >= 1");
  }
  if (auto s = detail::get_count(j, "seed", "", issues, true)) cfg.seed = *s;
  if (auto r = detail::get_count(j, "record_every", "", issues, false)) {
    cfg.record_every = *r;
    if (cfg.record_every < 1) issues.add("record_every: must be >= 1");
  }
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) issues.add("out_dir: must be a string");
    else cfg.out_dir = j.at("out_dir").get<std::string>();
  }
  if (j.contains("diagnostics")) {
    if (!j.at("diagnostics").is_boolean()) issues.add("diagnostics: must be a boolean");
    else cfg.diagnostics = j.at("diagnostics").get<bool>();
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (!g.is_object()) {
      issues.add("grid: must be an object");
    } else {
      detail::reject_unknown(g, "grid.", {"lo", "hi", "points"}, issues);
      GridSpec spec;
      auto lo = detail::get_number(g, "lo", "grid.", issues, true);
      auto hi = detail::get_number(g, "hi", "grid.", issues, true);
      auto pts = detail::get_count(g, "points", "grid.", issues, true);
      if (lo && hi && pts) {
        spec = GridSpec{*lo, *hi, static_cast<std::size_t>(*pts)};
        if (!(spec.lo <= spec.hi)) issues.add("grid: lo must not exceed hi");
        if (spec.points < 1) issues.add("grid.points: must be >= 1");
        cfg.grid = spec;
      }
    }
  }

  if (!j.contains("algos") || !j.at("algos").is_array() || j.at("algos").empty()) {
    issues.add("algos: missing or empty");
  } else {
    std::set<std::string> labels;
    for (std::size_t k = 0; k < j.at("algos").size(); ++k)
      if (auto a = detail::parse_algo(j.at("algos")[k], k, cfg.alpha, issues)) {
        if (!labels.insert(a->label).second)
          issues.add("algos[" + std::to_string(k) + "].label: duplicate label '" + a->label + "'");
        cfg.algos.push_back(std::move(*a));
      }
  }

  // cross-field checks once the pieces parsed cleanly
  if (issues.empty()) {
    try {
      const auto problem = cfg.problem.build();
      if (static_cast<std::size_t>(cfg.x0.size()) != problem.dim())
        issues.add("x0: dimension " + std::to_string(cfg.x0.size()) +
                   " does not match problem dimension " + std::to_string(problem.dim()));
    } catch (const InputError& e) {
      issues.add(std::string("problem: ") + e.what());
    }
  }

  if (!issues.empty()) throw ConfigError(issues.take());
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace sqo::harness

#endif  // SQO_HARNESS_CONFIG_HPP
