#ifndef SQO_HARNESS_CSV_HPP
#define SQO_HARNESS_CSV_HPP

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqo/errors.hpp"
#include "sqo/harness/experiment.hpp"
#include "sqo/harness/format.hpp"

namespace sqo::harness {

inline constexpr const char* kAggregateHeader = "algo,t,queries,mean_gap,std_gap,n_trials";
inline constexpr const char* kBoundsHeader = "algo,t,bound_gap,excluded_terms_note";
inline constexpr const char* kDiagnosticsHeader = "algo,trial,t,user,ei,inner,norm_sq,radius";

struct BoundRow {
  std::string algo;
  std::size_t t = 0;
  double bound_gap = 0.0;
  std::string note;
};

// Quotes a field only when it needs it.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_aggregate(std::ostream& os, const std::vector<AggregateCurve>& curves) {
  os << kAggregateHeader << '\n';
  for (const auto& c : curves)
    for (const auto& p : c.points)
      os << csv_field(c.algo) << ',' << p.t << ',' << p.queries << ',' << format_double(p.mean_gap)
         << ',' << format_double(p.std_gap) << ',' << p.n_trials << '\n';
}

inline std::string raw_header(std::size_t dim) {
  std::string h = "algo,trial,t,queries";
  for (std::size_t j = 0; j < dim; ++j) h += ",x" + std::to_string(j);
  return h + ",selected,explored,gap";
}

/// One row per recorded step of every surviving trial. `selected` is empty
/// on the final row of a trajectory.
inline void write_raw(std::ostream& os, const ExperimentResult& res, std::size_t dim) {
  os << raw_header(dim) << '\n';
  for (const auto& a : res.algos)
    for (const auto& tr : a.trials) {
      if (!tr.ok()) continue;
      for (const auto& s : tr.trajectory->steps) {
        os << csv_field(a.spec.label) << ',' << tr.trial << ',' << s.t << ',' << s.queries;
        for (Eigen::Index j = 0; j < s.x.size(); ++j) os << ',' << format_double(s.x(j));
        os << ',';
        if (s.selected) os << *s.selected;
        os << ',' << (s.explored ? 1 : 0) << ',' << format_double(s.gap) << '\n';
      }
    }
}

/// Per-user EI components at every recorded step that carries them. For
/// SGQ these are the surrogate values and the radii; other algorithms
/// report exact EI with radius 0.
inline void write_diagnostics(std::ostream& os, const ExperimentResult& res) {
  os << kDiagnosticsHeader << '\n';
  for (const auto& a : res.algos)
    for (const auto& tr : a.trials) {
      if (!tr.ok()) continue;
      for (const auto& s : tr.trajectory->steps) {
        if (!s.diagnostics) continue;
        const auto& d = *s.diagnostics;
        for (std::size_t i = 0; i < d.size(); ++i) {
          const double r = i < d.radius.size() ? d.radius[i] : 0.0;
          os << csv_field(a.spec.label) << ',' << tr.trial << ',' << s.t << ',' << i << ','
             << format_double(d.ei[i]) << ',' << format_double(d.inner[i]) << ','
             << format_double(d.norm_sq[i]) << ',' << format_double(r) << '\n';
        }
      }
    }
}

inline void write_bounds(std::ostream& os, const std::vector<BoundRow>& rows) {
  os << kBoundsHeader << '\n';
  for (const auto& r : rows)
    os << csv_field(r.algo) << ',' << r.t << ',' << format_double(r.bound_gap) << ','
       << csv_field(r.note) << '\n';
}

/// Divergent or failed trials, per algorithm.
inline nlohmann::json failure_report(const ExperimentResult& res) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& a : res.algos) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& tr : a.trials) {
      if (tr.ok()) continue;
      nlohmann::json f = {{"trial", tr.trial}, {"reason", tr.failure}};
      if (tr.failed_at) f["iteration"] = *tr.failed_at;
      list.push_back(std::move(f));
    }
    out[a.spec.label] = {{"trials", a.trials.size()},
                         {"surviving", a.trials.size() - a.failures()},
                         {"failures", std::move(list)}};
  }
  return out;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  return os;
}

inline void finish_output(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw Error("write failed: " + path.string());
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  auto os = open_output(path);
  writer(os);
  finish_output(os, path);
}

inline void write_csv(const std::vector<AggregateCurve>& curves, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& os) { write_aggregate(os, curves); });
}

struct OutputFiles {
  std::filesystem::path aggregate;
  std::filesystem::path failures;
  std::optional<std::filesystem::path> raw;
  std::optional<std::filesystem::path> diagnostics;
};

/// Writes aggregate.csv and failures.json, plus raw.csv and
/// diagnostics.csv when the config asks for diagnostics.
inline OutputFiles write_experiment(const ExperimentResult& res, const ExperimentConfig& cfg,
                                    const std::filesystem::path& dir) {
  OutputFiles f;
  f.aggregate = dir / "aggregate.csv";
  f.failures = dir / "failures.json";
  write_csv(res.curves(), f.aggregate);
  write_file(f.failures, [&](std::ostream& os) { os << failure_report(res).dump(2) << '\n'; });
  if (cfg.diagnostics) {
    f.raw = dir / "raw.csv";
    f.diagnostics = dir / "diagnostics.csv";
    const auto dim = static_cast<std::size_t>(cfg.x0.size());
    write_file(*f.raw, [&](std::ostream& os) { write_raw(os, res, dim); });
    write_file(*f.diagnostics, [&](std::ostream& os) { write_diagnostics(os, res); });
  }
  return f;
}

}  // namespace sqo::harness

#endif  // SQO_HARNESS_CSV_HPP
