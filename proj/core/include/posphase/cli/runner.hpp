#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "posphase/cli/config.hpp"
#include "posphase/data/grammar.hpp"
#include "posphase/model/training.hpp"
#include "posphase/model/transformer.hpp"

namespace posphase::cli {

using Logger = std::function<void(const std::string&)>;

// Seeds of every derived data set, as functions of the pretraining seed.
struct DerivedSeeds {
  std::uint64_t sentences;
  std::uint64_t pairs;
  std::uint64_t eval_pairs;
  std::uint64_t globality;
  std::uint64_t task;
};
DerivedSeeds derive_seeds(std::uint64_t seed);

// "<name>-s<seed>"
std::string model_id(const RunConfig& config, std::uint64_t seed);

// Sweep shifts, auto-expanded when the config leaves them empty.
std::vector<std::int32_t> resolve_shifts(const RunConfig& config);

struct PretrainResult {
  model::Transformer model;
  model::TrainReport report;
  std::vector<std::pair<std::size_t, double>> eval_log;  // (step, k=0 pair accuracy)
};

// Builds the corpus in the configured layout and trains a fresh model.
PretrainResult pretrain(const RunConfig& config, std::uint64_t seed, const Logger& log = {});

struct RunOutcome {
  std::filesystem::path directory;
  std::vector<std::string> outputs;  // file names inside `directory`
  double wall_seconds = 0;
};

// Executes config.pipeline into <out_dir>/<name>. manifest.json is written
// first with status "running" and finalized as "ok", or as "failed" with the
// error message before the exception propagates. CSVs depend only on the
// config, never on timing or thread count.
RunOutcome run(const RunConfig& config, const Logger& log = {});

// Merges the figure CSVs of several run directories into `out_dir`
// (report_<figure>.csv plus SVG). IoError for a missing manifest or a CSV the
// manifest lists but the directory lacks; UsageError when runs disagree on a
// metric name or on histogram shift lists.
std::vector<std::string> report(const std::vector<std::filesystem::path>& run_dirs,
                                const std::filesystem::path& out_dir);

std::string code_version();

}  // namespace posphase::cli
