#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

#include "compare.hpp"
#include "gossipfield/error.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gossip opinion dynamics with stubborn agents: simulation, exact moments and fluidity analysis"};
  app.set_version_flag("--version", std::string(gossipfield::tools::kVersion));
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Execute an experiment spec and write outputs plus manifest.json");
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--verbose", verbose, "Progress on stderr");

  std::string dir_a;
  std::string dir_b;
  double tolerance = 1e-8;
  auto* compare = app.add_subcommand("compare", "Compare the outputs of two runs");
  compare->add_option("DIR_A", dir_a, "First run directory")->required();
  compare->add_option("DIR_B", dir_b, "Second run directory")->required();
  compare->add_option("--tolerance", tolerance, "Absolute tolerance")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    const auto result = gossipfield::tools::run_experiment(spec_path, out_dir, verbose ? &std::cerr : nullptr);
    if (result.exit_code != 0) std::cerr << result.manifest["error"].dump() << '\n';
    return result.exit_code;
  }
  try {
    const auto result = gossipfield::tools::compare_runs(dir_a, dir_b, tolerance);
    std::cout << result.report.dump(2) << '\n';
    return result.identical_within_tolerance ? 0 : 1;
  } catch (const gossipfield::Error& e) {
    std::cerr << nlohmann::json{{"code", e.code_name()}, {"message", e.what()}}.dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"code", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
}
