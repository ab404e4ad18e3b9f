// hsgd: command-line driver for the heterogeneous local SGD simulator.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsgd/harness.hpp"
#include "hsgd/models.hpp"

namespace {

constexpr double kGradTolerance = 1e-4;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  hsgd::require(out.good(), hsgd::ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  hsgd::require(out.good(), hsgd::ErrorCode::kIoError, "failed writing " + path.string());
}

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

hsgd::ExperimentConfig load(const std::string& path, const GlobalFlags& flags) {
  hsgd::ExperimentConfig config = hsgd::load_config(path);
  if (flags.seed) config.seeds = {*flags.seed};
  if (!flags.out.empty()) config.output_csv = flags.out;
  return config;
}

int cmd_run(const std::string& config_path, const GlobalFlags& flags) {
  const auto config = load(config_path, flags);
  const auto result = hsgd::run(config);
  const std::string csv = hsgd::records_csv(result);
  const std::string summary = hsgd::summary_json(result.summary);
  if (config.output_csv.empty()) {
    std::cout << csv;
    if (!flags.quiet) std::cerr << summary;
    return 0;
  }
  write_file(config.output_csv, csv);
  auto summary_path = config.output_summary;
  if (summary_path.empty()) {
    summary_path = config.output_csv;
    summary_path.replace_extension(".summary.json");
  }
  write_file(summary_path, summary);
  if (!flags.quiet) {
    std::cerr << "wrote " << config.output_csv.string() << " and " << summary_path.string() << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& lambdas,
              const std::vector<std::size_t>& tau_s_rows, bool check_only,
              const GlobalFlags& flags) {
  const auto config = load(config_path, flags);
  const auto rows = hsgd::sweep_lambda(config, lambdas, tau_s_rows, !check_only);
  const std::string grid = hsgd::lambda_grid_csv(rows);
  if (flags.out.empty()) {
    std::cout << grid;
  } else {
    write_file(flags.out, grid);
  }
  return 0;
}

int cmd_timing(const std::string& config_path, const GlobalFlags& flags) {
  const auto config = load(config_path, flags);
  const std::string csv = hsgd::timing_csv(hsgd::timing_breakdown(config));
  if (flags.out.empty()) {
    std::cout << csv;
  } else {
    write_file(flags.out, csv);
  }
  return 0;
}

int cmd_validate(const std::string& config_path, const GlobalFlags& flags) {
  const auto config = load(config_path, flags);
  hsgd::validate_with_data(config);
  if (!flags.quiet) std::cout << "ok " << config_path << "\n";
  return 0;
}

int cmd_gradcheck(std::size_t instances, const GlobalFlags& flags) {
  const auto report = hsgd::gradient_check(instances, flags.seed.value_or(1));
  const bool ok = report.max_relative_error < kGradTolerance;
  std::printf("instances=%zu checked=%zu skipped=%zu max_rel_error=%.3e tolerance=%.0e %s\n",
              report.instances, report.coordinates_checked, report.coordinates_skipped,
              report.max_relative_error, kGradTolerance, ok ? "PASS" : "FAIL");
  if (!ok) {
    std::fprintf(stderr, "error: gradcheck_failed: max relative error %.3e >= %.0e\n",
                 report.max_relative_error, kGradTolerance);
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for heterogeneous, system-aware local SGD"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Run a single seed instead of the configured list")
      ->each([&](const std::string&) { flags.seed = seed; });
  app.add_option("--out", flags.out, "Output file (CSV)");
  app.add_flag("--quiet", flags.quiet, "Suppress informational output");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Train all configured seeds and write the metrics CSV");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep-lambda", "Candidate-pool ablation grid over lambda");
  std::vector<double> lambdas{2, 4, 8, 16, 32};
  std::vector<std::size_t> tau_s_rows;
  bool check_only = false;
  sweep->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--lambdas", lambdas, "Lambda values")->delimiter(',');
  sweep->add_option("--tau-s", tau_s_rows, "Slow local update counts, one grid row each")
      ->delimiter(',');
  sweep->add_flag("--check-only", check_only, "Mark cells ok/NA without training");

  auto* timing = app.add_subcommand("timing", "Per-round compute/blocking breakdown");
  timing->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Check a config and its dataset");
  validate->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* gradcheck = app.add_subcommand("gradcheck", "Backward pass vs finite differences");
  std::size_t instances = 100;
  gradcheck->add_option("--instances", instances, "Random instances to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n%s", e.what(), app.help().c_str());
    return 2;
  }

  try {
    if (*run) return cmd_run(config_path, flags);
    if (*sweep) return cmd_sweep(config_path, lambdas, tau_s_rows, check_only, flags);
    if (*timing) return cmd_timing(config_path, flags);
    if (*validate) return cmd_validate(config_path, flags);
    if (*gradcheck) return cmd_gradcheck(instances, flags);
  } catch (const hsgd::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(hsgd::to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 2;
}
