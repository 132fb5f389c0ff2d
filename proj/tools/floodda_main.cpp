// Command-line driver: truth synthesis, twin-experiment runs, report
// inspection and side-by-side comparison.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "floodda/config.hpp"
#include "floodda/harness.hpp"

namespace fs = std::filesystem;

namespace {

floodda::ExperimentConfig load_config(const std::string& path,
                                      const CLI::Option* seed_opt,
                                      std::uint64_t seed) {
  auto cfg = floodda::load_experiment_config(path);
  if (seed_opt->count() > 0) cfg.seed = seed;
  return cfg;
}

// Accepts either a report.csv or a directory containing one; the column
// label comes from the directory so `compare out/ida out/igda` reads well.
floodda::RunReport load_report_arg(const std::string& arg, std::string* name) {
  fs::path p(arg);
  if (fs::is_directory(p)) p /= "report.csv";
  *name = p.filename() == "report.csv" && p.has_parent_path()
              ? p.parent_path().filename().string()
              : p.stem().string();
  return floodda::load_report_csv(p.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint gauge/wet-ratio data assimilation twin experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::string mode_str;
  std::string truth_dir;
  bool dump_diagnostics = false;
  std::vector<std::string> report_args;

  auto* truth_cmd = app.add_subcommand(
      "truth", "Generate the synthetic reference run and noisy observations");
  truth_cmd->add_option("--config", config_path, "Experiment config (TOML)")
      ->required();
  auto* truth_seed =
      truth_cmd->add_option("--seed", seed, "Override the config seed");
  truth_cmd->add_option("--out", out_dir,
                        "Output root; truth artifacts go to <out>/truth");

  auto* run_cmd =
      app.add_subcommand("run", "Run one experiment against stored truth");
  run_cmd->add_option("--config", config_path, "Experiment config (TOML)")
      ->required();
  run_cmd->add_option("--mode", mode_str, "fr, ida, or igda")
      ->required()
      ->check(CLI::IsMember({"fr", "ida", "igda"}, CLI::ignore_case));
  auto* run_seed =
      run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--out", out_dir,
                      "Output root; results go to <out>/<mode>");
  run_cmd->add_option("--truth", truth_dir,
                      "Truth artifact directory (default <out>/truth)");
  run_cmd->add_flag("--dump-diagnostics", dump_diagnostics,
                    "Also write per-cycle ensemble diagnostics");

  auto* report_cmd =
      app.add_subcommand("report", "Print a stored report as a table");
  report_cmd
      ->add_option("paths", report_args, "report.csv files or run directories")
      ->required()
      ->expected(1);

  auto* compare_cmd = app.add_subcommand(
      "compare", "Print reports side by side (two reports add a delta column)");
  compare_cmd
      ->add_option("paths", report_args, "report.csv files or run directories")
      ->required()
      ->expected(2, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (truth_cmd->parsed()) {
      const auto cfg = load_config(config_path, truth_seed, seed);
      const auto dir = (fs::path(out_dir) / "truth").string();
      floodda::generate_truth(cfg, dir);
      std::cout << "truth written to " << dir << "\n";
    } else if (run_cmd->parsed()) {
      const auto cfg = load_config(config_path, run_seed, seed);
      const auto mode = floodda::parse_run_mode(mode_str);
      const auto name = floodda::mode_name(mode);
      if (truth_dir.empty())
        truth_dir = (fs::path(out_dir) / "truth").string();
      const auto dir = (fs::path(out_dir) / name).string();
      const auto report =
          floodda::run_experiment(cfg, mode, truth_dir, dir, dump_diagnostics);
      std::cout << floodda::format_report_table({name}, {report});
      std::cout << "results written to " << dir << "\n";
    } else if (report_cmd->parsed() || compare_cmd->parsed()) {
      std::vector<std::string> names;
      std::vector<floodda::RunReport> reports;
      for (const auto& arg : report_args) {
        std::string name;
        reports.push_back(load_report_arg(arg, &name));
        names.push_back(name);
      }
      std::cout << floodda::format_report_table(names, reports);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
