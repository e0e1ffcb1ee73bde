// qfilt command line: run scenarios, compare artifacts, list scenarios.

#include "cli/artifacts.hpp"
#include "cli/compare.hpp"
#include "cli/config.hpp"
#include "cli/scenarios.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace qfilt::cli;

struct RunFlags {
  std::string scenario;
  std::string config;
  std::string l, k, h;
  std::optional<double> nu, T, dt;
  std::optional<std::uint64_t> N, seed;
  std::optional<int> workers;
  std::string out, scheme, measure;
};

// Flags override config values; errors carry the flag name instead of a line.
ScenarioConfig build_config(const RunFlags& f) {
  ScenarioConfig c;
  if (!f.config.empty()) c = load_config(f.config);
  if (!f.scenario.empty()) {
    if (!f.config.empty() && f.scenario != c.scenario) {
      throw ConfigError(c.line_of("scenario"),
                        "scenario '" + f.scenario + "' conflicts with config scenario '" + c.scenario + "'");
    }
    c.scenario = f.scenario;
  }
  if (c.scenario.empty()) throw ConfigError(0, "no scenario given (positional argument or config)");
  auto vec = [](const std::string& s, const char* flag) {
    try {
      return parse_vec3(s);
    } catch (const std::exception& ex) {
      throw ConfigError(0, std::string("--") + flag + ": " + ex.what());
    }
  };
  if (!f.l.empty()) c.l = vec(f.l, "l");
  if (!f.k.empty()) {
    c.k = vec(f.k, "k");
    c.h.reset();
  }
  if (!f.h.empty()) {
    c.h = vec(f.h, "h");
    c.k.reset();
  }
  if (f.nu) c.nu = f.nu;
  if (f.T) c.T = f.T;
  if (f.dt) c.dt = f.dt;
  if (f.N) c.N = f.N;
  if (f.seed) c.seed = f.seed;
  if (f.workers) c.workers = f.workers;
  if (!f.scheme.empty()) c.method = f.scheme;
  if (!f.measure.empty()) c.measure = f.measure;
  return c;
}

int do_run(const RunFlags& f) {
  try {
    const ScenarioConfig c = build_config(f);
    const std::optional<std::string> flag_out = f.out.empty() ? std::nullopt : std::optional(f.out);
    const RunResult r = run_scenario(c, resolve_out_dir(c, flag_out));
    std::cout << "scenario " << c.scenario << " -> " << r.out_dir << "\n";
    if (r.aborted) std::cout << "aborted trajectories: " << r.aborted << " (see manifest.json)\n";
    if (r.exit_code != 0) std::cout << "built-in checks failed\n";
    return r.exit_code;
  } catch (const ConfigError& ex) {
    std::cerr << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  }
}

int do_compare(const std::string& a, const std::string& b, const std::string& tol,
               const std::string& json_out) {
  try {
    const CompareReport rep = compare_tables(read_csv(a), read_csv(b), ToleranceSpec::parse(tol));
    for (const auto& c : rep.columns) {
      std::cout << c.column << ": max " << format_double(c.max_abs) << " mean " << format_double(c.mean_abs);
      if (c.tolerance) std::cout << " tol " << format_double(*c.tolerance) << (c.pass ? " pass" : " FAIL");
      std::cout << "\n";
    }
    std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
    if (!json_out.empty()) {
      std::ofstream out(json_out, std::ios::binary);
      out << rep.to_json().dump(2) << "\n";
    }
    return rep.pass ? 0 : 1;
  } catch (const SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qfilt: quantum filtering and trajectory scenarios"};
  app.require_subcommand(1);

  RunFlags f;
  auto* run = app.add_subcommand("run", "Run a scenario and write artifacts");
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("scenario", f.scenario, "Scenario name (see list-scenarios)");
  run->add_option("-c,--config", f.config, "YAML config file");
  run->add_option("--l", f.l, "Coupling vector l as x,y,z");
  run->add_option("--k", f.k, "Rotation vector k as x,y,z");
  run->add_option("--h", f.h, "Hamiltonian vector h as x,y,z");
  run->add_option("--nu", f.nu, "Counting intensity");
  run->add_option("--N", f.N, "Ensemble size");
  run->add_option("--T", f.T, "Final time");
  run->add_option("--dt", f.dt, "Time step");
  run->add_option("--seed", f.seed, "Seed");
  run->add_option("--workers", f.workers, "Worker threads (does not change results)");
  run->add_option("--out", f.out, std::string("Output directory (default $") + kOutDirEnv + " or qfilt_out)");
  run->add_option("--scheme", f.scheme, "euler or exponential");
  run->add_option("--measure", f.measure, "input or output");

  std::string a, b, tol, json_out;
  auto* cmp = app.add_subcommand("compare", "Compare two CSV artifacts column by column");
  cmp->add_option("a", a, "First CSV")->required();
  cmp->add_option("b", b, "Second CSV")->required();
  cmp->add_option("--tol", tol, "Tolerance: x, or col=x,...,*=x");
  cmp->add_option("--json", json_out, "Write the report as JSON");

  auto* list = app.add_subcommand("list-scenarios", "List scenario names");

  CLI11_PARSE(app, argc, argv);

  if (*run) return do_run(f);
  if (*cmp) return do_compare(a, b, tol, json_out);
  if (*list) {
    for (const auto& s : scenario_names()) std::cout << s << "\n";
    return 0;
  }
  return 0;
}
