#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sqo/harness/config.hpp"
#include "sqo/harness/csv.hpp"
#include "sqo/harness/experiment.hpp"
#include "sqo/harness/report.hpp"
#include "sqo/verify.hpp"

namespace {

using namespace sqo;
using namespace sqo::harness;

GridSpec parse_grid(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3) throw InputError("--grid expects lo,hi,points");
  GridSpec g;
  try {
    g.lo = std::stod(parts[0]);
    g.hi = std::stod(parts[1]);
    const long long pts = std::stoll(parts[2]);
    if (pts < 1) throw InputError("--grid needs at least 1 point");
    g.points = static_cast<std::size_t>(pts);
  } catch (const std::logic_error&) {
    throw InputError("--grid: cannot parse '" + s + "'");
  }
  if (!(g.lo < g.hi)) throw InputError("--grid needs lo < hi");
  return g;
}

int cmd_run(const std::string& config, const std::string& out, bool diagnostics) {
  ExperimentConfig cfg = load_config(config);
  if (!out.empty()) cfg.out_dir = out;
  if (diagnostics) cfg.diagnostics = true;
  const auto res = run_experiment(cfg);
  const auto files = write_experiment(res, cfg, cfg.out_dir);
  for (const auto& a : res.algos) {
    std::cout << a.spec.label << ": " << (a.trials.size() - a.failures()) << "/" << a.trials.size()
              << " trials";
    if (!a.curve.points.empty())
      std::cout << ", final mean gap " << format_double(a.curve.points.back().mean_gap);
    std::cout << '\n';
  }
  std::cout << "wrote " << files.aggregate.string() << '\n';
  if (files.raw) std::cout << "wrote " << files.raw->string() << '\n';
  return 0;
}

int cmd_verify(const std::string& config) {
  const ExperimentConfig cfg = load_config(config);
  const FiniteSumProblem problem = cfg.problem.build();
  verify::Context ctx{problem, cfg.x0, cfg.alpha, 0.3, 600, 200, cfg.seed, cfg.grid_or_default()};
  for (const auto& a : cfg.algos)
    if (a.kind == Algorithm::sgq) {
      ctx.p = *a.p;
      break;
    }
  const auto results = verify::run_all(ctx);
  for (const auto& r : results) {
    const char* tag = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    std::cout << tag << "  " << r.name << "  (" << r.checks << " checks, " << r.failures
              << " failures)";
    if (!r.detail.empty()) std::cout << "  " << r.detail;
    std::cout << '\n';
  }
  const bool ok = verify::all_pass(results);
  std::cout << (ok ? "all suites passed" : "some suites failed") << '\n';
  return ok ? 0 : 1;
}

int cmd_constants(const std::string& config, const std::string& grid) {
  const ExperimentConfig cfg = load_config(config);
  const FiniteSumProblem problem = cfg.problem.build();
  const GridSpec g = grid.empty() ? cfg.grid_or_default() : parse_grid(grid);
  std::cout << compute_constants(problem, cfg.alpha, g).to_json().dump(2) << '\n';
  return 0;
}

int cmd_bounds(const std::string& config, const std::string& algo, bool heuristic,
               const std::string& out) {
  const ExperimentConfig cfg = load_config(config);
  const FiniteSumProblem problem = cfg.problem.build();
  const auto rows = bound_curve(problem, cfg, find_algo(cfg, algo),
                                heuristic ? BoundMode::heuristic : BoundMode::strict);
  if (out.empty()) {
    write_bounds(std::cout, rows);
  } else {
    write_file(out, [&](std::ostream& os) { write_bounds(os, rows); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategic gradient querying experiments"};
  app.require_subcommand(1);

  std::string config, out, grid, algo;
  bool diagnostics = false, heuristic = false;

  auto* run = app.add_subcommand("run", "Run every configured algorithm and write CSVs");
  run->add_option("--config", config)->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides out_dir)");
  run->add_flag("--diagnostics", diagnostics, "Also write raw and per-user EI CSVs");

  auto* ver = app.add_subcommand("verify", "Run the property suites; exit 0 iff all pass");
  ver->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* con = app.add_subcommand("constants", "Print heterogeneity constants as JSON");
  con->add_option("--config", config)->required()->check(CLI::ExistingFile);
  con->add_option("--grid", grid, "lo,hi,points");

  auto* bnd = app.add_subcommand("bounds", "Print a bound curve as CSV");
  bnd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  bnd->add_option("--algo", algo, "Algorithm label or kind")->required();
  bnd->add_flag("--heuristic", heuristic, "Evaluate even outside the admissible stepsize range");
  bnd->add_option("--out", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out, diagnostics);
    if (*ver) return cmd_verify(config);
    if (*con) return cmd_constants(config, grid);
    if (*bnd) return cmd_bounds(config, algo, heuristic, out);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config " << config << ":\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
