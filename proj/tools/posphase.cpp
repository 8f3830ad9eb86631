// posphase: run phase-shift experiments from a config file.
//
//   posphase <pipeline> --config FILE [--seed N] [--out DIR] [--shifts LIST] [--threads N]
//   posphase run --pipeline NAME --config FILE [...]
//   posphase report RUN_DIR... [--out DIR]
//   posphase defaults            print every key with its default value
//
// Precedence: built-in defaults < config file < POSPHASE_<SECTION>_<KEY>
// environment variables < command-line flags.
// Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "posphase/cli/config.hpp"
#include "posphase/cli/runner.hpp"
#include "posphase/errors.hpp"
#include "posphase/phaseshift/shift.hpp"

namespace {

using posphase::cli::Pipeline;
using posphase::cli::RunConfig;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> shifts;
  std::optional<std::size_t> threads;
  std::string pipeline;
};

void add_run_flags(CLI::App* app, RunFlags& flags) {
  app->add_option("--config,-c", flags.config, "experiment config file")->required();
  app->add_option("--seed", flags.seed, "single pretraining seed (replaces run.seeds)");
  app->add_option("--out", flags.out, "parent directory for the run directory");
  app->add_option("--shifts", flags.shifts, "comma-separated sweep shifts");
  app->add_option("--threads", flags.threads, "worker threads");
}

RunConfig resolve(const RunFlags& flags, std::optional<Pipeline> pipeline) {
  RunConfig config = posphase::cli::load_run_config(flags.config);
  posphase::cli::apply_env_overrides(config);
  if (pipeline) config.pipeline = *pipeline;
  if (flags.seed) config.seeds = {*flags.seed};
  if (flags.out) config.out_dir = *flags.out;
  if (flags.shifts) posphase::cli::set_value(config, "sweep.shifts", *flags.shifts);
  if (flags.threads) config.threads = *flags.threads;
  config.validate();
  return config;
}

void log_line(const std::string& line) { std::cerr << "[posphase] " << line << std::endl; }

int execute(const RunConfig& config) {
  const auto outcome = posphase::cli::run(config, log_line);
  std::cout << outcome.directory.string() << '\n';
  for (const auto& name : outcome.outputs) std::cout << "  " << name << '\n';
  log_line("done in " + std::to_string(outcome.wall_seconds) + " s");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posphase: phase-shift probing of position embeddings"};
  app.require_subcommand(1);

  RunFlags flags;
  std::optional<Pipeline> chosen;
  std::vector<std::pair<CLI::App*, Pipeline>> pipeline_commands;
  for (auto p : {Pipeline::kPretrain, Pipeline::kSweep, Pipeline::kHistogram, Pipeline::kGlobality,
                 Pipeline::kMatrix, Pipeline::kAll}) {
    auto* sub = app.add_subcommand(std::string(posphase::cli::to_string(p)),
                                   "run the " + std::string(posphase::cli::to_string(p)) +
                                       " pipeline");
    add_run_flags(sub, flags);
    pipeline_commands.emplace_back(sub, p);
  }
  auto* run_cmd = app.add_subcommand("run", "run the pipeline named by --pipeline or run.pipeline");
  add_run_flags(run_cmd, flags);
  run_cmd->add_option("--pipeline,-p", flags.pipeline, "pretrain|sweep|histogram|globality|matrix|all");

  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  auto* report_cmd = app.add_subcommand("report", "merge figure CSVs of several runs");
  report_cmd->add_option("runs", report_dirs, "run directories")->required();
  report_cmd->add_option("--out", report_out, "output directory");

  auto* defaults_cmd = app.add_subcommand("defaults", "print a config file with every default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (defaults_cmd->parsed()) {
      posphase::cli::write_run_config(std::cout, RunConfig{});
      return kOk;
    }
    if (report_cmd->parsed()) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      for (const auto& name : posphase::cli::report(dirs, report_out)) {
        std::cout << (std::filesystem::path(report_out) / name).string() << '\n';
      }
      return kOk;
    }
    if (run_cmd->parsed()) {
      if (!flags.pipeline.empty()) chosen = posphase::cli::parse_pipeline(flags.pipeline, "--pipeline");
      return execute(resolve(flags, chosen));
    }
    for (const auto& [sub, p] : pipeline_commands) {
      if (sub->parsed()) return execute(resolve(flags, p));
    }
  } catch (const posphase::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
