// Command-line harness: runs scenarios (bundled by name or from a config
// file), replays stored traces through the verifier, and lists the bundled
// catalog. Exit codes: 0 success, 1 violations/aborts/failed verdicts,
// 2 configuration errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "consim/bundled.hpp"
#include "consim/scenario.hpp"
#include "consim/verify.hpp"

namespace {

int cmd_run(const std::string& target, const consim::RunnerOptions& opts) {
  using namespace consim;
  BundledOutcome outcome;
  if (const BundledScenario* b = find_bundled(target)) {
    outcome = run_bundled(*b, opts);
  } else {
    if (!std::filesystem::exists(target)) {
      // not a file: report with the catalog, like an unknown bundled name
      run_bundled(target, opts);
      return 2;
    }
    outcome.scenario = load_scenario_file(target);
    if (!outcome.scenario.special.empty())
      throw ConfigError("scenario file '" + target +
                        "': special scenarios are bundled-only");
    outcome.result = run_grid_scenario(outcome.scenario, opts);
    outcome.ok = outcome.result.ok(outcome.scenario.allow_aborts);
  }
  const auto& res = outcome.result;
  std::cout << "scenario " << res.name << ": " << res.rows.size() << " runs, "
            << res.safety_violations << " safety violations, " << res.aborts << " aborts\n";
  for (const auto& n : res.notes)
    if (n.find('\n') == std::string::npos) std::cout << "  " << n << "\n";
  for (const auto& v : res.verdicts) std::cout << v << "\n";
  if (!res.rows.empty())
    std::cout << "wrote " << (std::filesystem::path(opts.out_dir) / outcome.scenario.runs_csv).string()
              << "\n";
  return outcome.ok ? 0 : 1;
}

int cmd_replay(const std::string& path) {
  using namespace consim;
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open trace file '" << path << "'\n";
    return 2;
  }
  ExecutionTrace trace = ExecutionTrace::deserialize(in);
  auto violations = check_trace(trace);
  int safety = 0;
  for (const auto& v : violations) {
    std::cout << v.to_string() << "\n";
    if (is_safety_violation(v.kind)) ++safety;
  }
  if (violations.empty()) std::cout << "clean trace: no violations\n";
  return safety == 0 ? 0 : 1;
}

int cmd_list() {
  for (const auto& name : consim::list_scenarios()) std::cout << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consim: synchronous crash-fault consensus simulator"};
  app.require_subcommand(1);

  std::string run_target;
  consim::RunnerOptions opts;
  auto* run = app.add_subcommand("run", "run a bundled scenario or a scenario file");
  run->add_option("scenario", run_target, "bundled scenario name or config file path")
      ->required();
  run->add_option("--trials", opts.trials_override, "override the trial count");
  run->add_option("--seed", opts.seed_override, "override the base seed");
  run->add_option("--out", opts.out_dir, "output directory for CSV artifacts");
  run->add_option("--jobs", opts.jobs, "worker threads (default: hardware)");
  run->add_flag("--dump-failing-traces", opts.dump_failing,
                "serialize traces of failing seeds into the output directory");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "re-verify a stored trace file");
  replay->add_option("trace", replay_path, "trace file path")->required();

  app.add_subcommand("list", "list bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_target, opts);
    if (replay->parsed()) return cmd_replay(replay_path);
    return cmd_list();
  } catch (const consim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const consim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
