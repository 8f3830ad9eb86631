#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "posphase/data/grammar.hpp"
#include "posphase/model/config.hpp"

namespace posphase::cli {

enum class Pipeline { kPretrain, kSweep, kHistogram, kGlobality, kMatrix, kAll };

std::string_view to_string(Pipeline pipeline);
Pipeline parse_pipeline(std::string_view text, const std::string& key = "run.pipeline");

enum class CorpusLayout { kFixedStart, kPacked };

// Everything a run needs. Sections of the config file map onto the groups
// below; see config_reference() for the key list.
struct RunConfig {
  // [run]
  std::string name = "run";
  Pipeline pipeline = Pipeline::kAll;
  std::vector<std::uint64_t> seeds = {1};
  std::size_t threads = 1;
  std::filesystem::path out_dir = "runs";
  bool charts = true;

  // [model]; vocab_size is derived from the grammar
  model::ModelConfig model;

  // [data]
  CorpusLayout layout = CorpusLayout::kFixedStart;
  std::size_t n_sentences = 20000;
  std::size_t n_pairs = 500;
  double p_adjective = 0.3;
  double p_pp = 0.8;
  double p_transitive = 0.5;

  // [pretrain]
  std::size_t steps = 1000;
  std::size_t batch_size = 32;
  double lr = 1e-2;
  double clip_norm = 1.0;
  double mask_rate = 0.15;
  std::size_t eval_every = 100;
  double target_accuracy = 0;  // 0 trains for the full step budget
  std::size_t eval_pairs = 200;

  // [sweep]; empty shifts means 0, step, 2·step, ... while the longest
  // sentence fits
  std::vector<std::int32_t> shifts;
  std::int32_t shift_step = 32;
  bool pin_first = false;

  // [finetune]
  std::vector<std::int32_t> train_shifts = {0, 64, 128};
  std::vector<std::int32_t> eval_shifts;  // empty: same as train_shifts
  std::vector<std::uint64_t> finetune_seeds = {1, 2, 3};
  std::size_t finetune_steps = 300;
  std::size_t finetune_batch = 16;
  double finetune_lr = 1e-3;
  std::size_t n_train = 1000;
  std::size_t n_validation = 500;
  bool freeze_positions = false;

  // [globality]; empty shifts reuse the sweep shifts
  std::vector<std::int32_t> globality_shifts;
  std::size_t globality_sentences = 100;
  bool exclude_specials = false;

  // [checkpoint]; `load` may contain {seed}
  std::string load;
  bool save = true;

  data::GrammarSpec grammar() const;
  // Model config with vocab_size filled in.
  model::ModelConfig model_config() const;
  // ConfigError naming the key on the first invalid value.
  void validate() const;
};

// Documented keys in file order: "section.key" -> one-line description.
const std::vector<std::pair<std::string, std::string>>& config_reference();

// Assigns one "section.key" from text. ConfigError naming the key path for an
// unknown key or an unparsable value.
void set_value(RunConfig& config, const std::string& key_path, const std::string& value);
std::string get_value(const RunConfig& config, const std::string& key_path);

// Sections of key = value lines; ';' and '#' start comments. Keys not set in
// the text keep their defaults.
RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// Applies POSPHASE_<SECTION>_<KEY> variables (upper case), e.g.
// POSPHASE_SWEEP_SHIFTS. `lookup` defaults to std::getenv.
using EnvLookup = std::function<const char*(const char*)>;
void apply_env_overrides(RunConfig& config, const EnvLookup& lookup = {});

// Every key with its resolved value, as a config file that reproduces the run.
void write_run_config(std::ostream& out, const RunConfig& config);
std::map<std::string, std::map<std::string, std::string>> config_snapshot(const RunConfig& config);

}  // namespace posphase::cli
