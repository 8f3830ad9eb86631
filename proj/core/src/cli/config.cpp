#include "posphase/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "posphase/csv.hpp"
#include "posphase/errors.hpp"
#include "posphase/phaseshift/shift.hpp"

namespace posphase::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename Int>
Int parse_int(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  Int value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return value;
}

std::size_t parse_count(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (!t.empty() && t[0] == '-') throw ConfigError(key, "must not be negative");
  return parse_int<std::size_t>(t, key);
}

double parse_real(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<std::int32_t> parse_shifts(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t.empty() || t == "auto") return {};
  try {
    return phaseshift::parse_shift_list(t);
  } catch (const ConfigError& e) {
    throw ConfigError(key, e.what());
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text, const std::string& key) {
  std::vector<std::uint64_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_int<std::uint64_t>(item, key));
  if (out.empty()) throw ConfigError(key, "needs at least one seed");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string shifts_text(const std::vector<std::int32_t>& shifts) {
  return shifts.empty() ? "auto" : join(shifts);
}

struct Field {
  std::string path;
  std::string doc;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field count_field(std::string path, std::string doc, Member member) {
  return {std::move(path), std::move(doc),
          [member](RunConfig& c, const std::string& v, const std::string& k) {
            member(c) = parse_count(v, k);
          },
          [member](const RunConfig& c) { return std::to_string(member(c)); }};
}

template <typename Member>
Field real_field(std::string path, std::string doc, Member member) {
  return {std::move(path), std::move(doc),
          [member](RunConfig& c, const std::string& v, const std::string& k) {
            member(c) = parse_real(v, k);
          },
          [member](const RunConfig& c) { return format_real(member(c)); }};
}

template <typename Member>
Field bool_field(std::string path, std::string doc, Member member) {
  return {std::move(path), std::move(doc),
          [member](RunConfig& c, const std::string& v, const std::string& k) {
            member(c) = parse_bool(v, k);
          },
          [member](const RunConfig& c) {
            return std::string(member(c) ? "true" : "false");
          }};
}

template <typename Member>
Field shifts_field(std::string path, std::string doc, Member member) {
  return {std::move(path), std::move(doc),
          [member](RunConfig& c, const std::string& v, const std::string& k) {
            member(c) = parse_shifts(v, k);
          },
          [member](const RunConfig& c) { return shifts_text(member(c)); }};
}

template <typename Member>
Field seeds_field(std::string path, std::string doc, Member member) {
  return {std::move(path), std::move(doc),
          [member](RunConfig& c, const std::string& v, const std::string& k) {
            member(c) = parse_seeds(v, k);
          },
          [member](const RunConfig& c) { return join(member(c)); }};
}

template <typename Member>
Field string_field(std::string path, std::string doc, Member member) {
  return {std::move(path), std::move(doc),
          [member](RunConfig& c, const std::string& v, const std::string&) {
            member(c) = trim(v);
          },
          [member](const RunConfig& c) { return std::string(member(c)); }};
}

#define POSPHASE_MEMBER(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(string_field("run.name", "run directory name under out_dir; also prefixes model ids",
                             POSPHASE_MEMBER(name)));
    f.push_back({"run.pipeline", "pretrain | sweep | histogram | globality | matrix | all",
                 [](RunConfig& c, const std::string& v, const std::string& k) {
                   c.pipeline = parse_pipeline(trim(v), k);
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.pipeline)); }});
    f.push_back(seeds_field("run.seeds", "comma-separated pretraining seeds; one model per seed",
                            POSPHASE_MEMBER(seeds)));
    f.push_back(count_field("run.threads", "worker threads for scoring and fine-tuning cells",
                            POSPHASE_MEMBER(threads)));
    f.push_back({"run.out_dir", "parent directory of run directories",
                 [](RunConfig& c, const std::string& v, const std::string&) { c.out_dir = trim(v); },
                 [](const RunConfig& c) { return c.out_dir.string(); }});
    f.push_back(bool_field("run.charts", "emit SVG charts next to the CSVs", POSPHASE_MEMBER(charts)));

    f.push_back(count_field("model.d_model", "embedding width", POSPHASE_MEMBER(model.d_model)));
    f.push_back(count_field("model.n_layers", "transformer blocks", POSPHASE_MEMBER(model.n_layers)));
    f.push_back(count_field("model.n_heads", "attention heads per block",
                            POSPHASE_MEMBER(model.n_heads)));
    f.push_back(count_field("model.context_window", "number of positions T",
                            POSPHASE_MEMBER(model.context_window)));
    f.push_back({"model.pe_scheme", "learned_ape | sinusoidal | relative | none",
                 [](RunConfig& c, const std::string& v, const std::string& k) {
                   c.model.pe_scheme = model::parse_pe_scheme(trim(v), k);
                 },
                 [](const RunConfig& c) { return std::string(model::to_string(c.model.pe_scheme)); }});
    f.push_back({"model.attention_mode", "causal | bidirectional",
                 [](RunConfig& c, const std::string& v, const std::string& k) {
                   c.model.attention_mode = model::parse_attention_mode(trim(v), k);
                 },
                 [](const RunConfig& c) {
                   return std::string(model::to_string(c.model.attention_mode));
                 }});
    f.push_back({"model.rel_max_distance", "clip distance of the relative bias table",
                 [](RunConfig& c, const std::string& v, const std::string& k) {
                   c.model.rel_max_distance = parse_int<std::int32_t>(v, k);
                 },
                 [](const RunConfig& c) { return std::to_string(c.model.rel_max_distance); }});
    f.push_back(count_field("model.mlp_mult", "MLP hidden width as a multiple of d_model",
                            POSPHASE_MEMBER(model.mlp_mult)));

    f.push_back({"data.layout", "fixed_start | packed",
                 [](RunConfig& c, const std::string& v, const std::string& k) {
                   const std::string t = trim(v);
                   if (t == "fixed_start") {
                     c.layout = CorpusLayout::kFixedStart;
                   } else if (t == "packed") {
                     c.layout = CorpusLayout::kPacked;
                   } else {
                     throw ConfigError(k, "unknown layout '" + t + "'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.layout == CorpusLayout::kPacked ? "packed" : "fixed_start");
                 }});
    f.push_back(count_field("data.n_sentences", "pretraining sentences", POSPHASE_MEMBER(n_sentences)));
    f.push_back(count_field("data.n_pairs", "minimal pairs scored by sweeps", POSPHASE_MEMBER(n_pairs)));
    f.push_back(real_field("data.p_adjective", "probability of an adjective in a noun phrase",
                           POSPHASE_MEMBER(p_adjective)));
    f.push_back(real_field("data.p_pp", "probability of a prepositional phrase after the subject",
                           POSPHASE_MEMBER(p_pp)));
    f.push_back(real_field("data.p_transitive", "probability of a transitive verb phrase",
                           POSPHASE_MEMBER(p_transitive)));

    f.push_back(count_field("pretrain.steps", "optimizer steps", POSPHASE_MEMBER(steps)));
    f.push_back(count_field("pretrain.batch_size", "sequences per step", POSPHASE_MEMBER(batch_size)));
    f.push_back(real_field("pretrain.lr", "Adam learning rate", POSPHASE_MEMBER(lr)));
    f.push_back(real_field("pretrain.clip_norm", "global gradient-norm clip; 0 disables",
                           POSPHASE_MEMBER(clip_norm)));
    f.push_back(real_field("pretrain.mask_rate", "MLM masking rate (bidirectional models)",
                           POSPHASE_MEMBER(mask_rate)));
    f.push_back(count_field("pretrain.eval_every", "steps between k=0 pair-accuracy checks; 0 never",
                            POSPHASE_MEMBER(eval_every)));
    f.push_back(real_field("pretrain.target_accuracy", "stop once k=0 accuracy reaches this; 0 never",
                           POSPHASE_MEMBER(target_accuracy)));
    f.push_back(count_field("pretrain.eval_pairs", "held-out pairs for the checks",
                            POSPHASE_MEMBER(eval_pairs)));

    f.push_back(shifts_field("sweep.shifts", "comma-separated shifts, or auto", POSPHASE_MEMBER(shifts)));
    f.push_back({"sweep.step", "spacing of the auto shift list",
                 [](RunConfig& c, const std::string& v, const std::string& k) {
                   c.shift_step = parse_int<std::int32_t>(v, k);
                 },
                 [](const RunConfig& c) { return std::to_string(c.shift_step); }});
    f.push_back(bool_field("sweep.pin_first", "keep the leading CLS at position 0",
                           POSPHASE_MEMBER(pin_first)));

    f.push_back(shifts_field("finetune.train_shifts", "shifts used while fine-tuning",
                             POSPHASE_MEMBER(train_shifts)));
    f.push_back(shifts_field("finetune.eval_shifts", "evaluation shifts; auto reuses train_shifts",
                             POSPHASE_MEMBER(eval_shifts)));
    f.push_back(seeds_field("finetune.seeds", "fine-tuning seeds per cell",
                            POSPHASE_MEMBER(finetune_seeds)));
    f.push_back(count_field("finetune.steps", "optimizer steps per cell", POSPHASE_MEMBER(finetune_steps)));
    f.push_back(count_field("finetune.batch_size", "sentences per step", POSPHASE_MEMBER(finetune_batch)));
    f.push_back(real_field("finetune.lr", "Adam learning rate", POSPHASE_MEMBER(finetune_lr)));
    f.push_back(count_field("finetune.n_train", "training sentences", POSPHASE_MEMBER(n_train)));
    f.push_back(count_field("finetune.n_validation", "validation sentences",
                            POSPHASE_MEMBER(n_validation)));
    f.push_back(bool_field("finetune.freeze_positions", "keep pos_emb fixed",
                           POSPHASE_MEMBER(freeze_positions)));

    f.push_back(shifts_field("globality.shifts", "shifts; auto reuses the sweep shifts",
                             POSPHASE_MEMBER(globality_shifts)));
    f.push_back(count_field("globality.n_sentences", "sentences averaged per head",
                            POSPHASE_MEMBER(globality_sentences)));
    f.push_back(bool_field("globality.exclude_specials", "drop CLS/EOS and renormalize rows",
                           POSPHASE_MEMBER(exclude_specials)));

    f.push_back(string_field("checkpoint.load", "load this checkpoint instead of pretraining",
                             POSPHASE_MEMBER(load)));
    f.push_back(bool_field("checkpoint.save", "write <model_id>.ckpt into the run directory",
                           POSPHASE_MEMBER(save)));
    return f;
  }();
  return all;
}

#undef POSPHASE_MEMBER

const Field& field(const std::string& key_path) {
  for (const auto& f : fields()) {
    if (f.path == key_path) return f;
  }
  throw ConfigError(key_path, "unknown config key");
}

}  // namespace

std::string_view to_string(Pipeline pipeline) {
  switch (pipeline) {
    case Pipeline::kPretrain: return "pretrain";
    case Pipeline::kSweep: return "sweep";
    case Pipeline::kHistogram: return "histogram";
    case Pipeline::kGlobality: return "globality";
    case Pipeline::kMatrix: return "matrix";
    case Pipeline::kAll: return "all";
  }
  return "?";
}

Pipeline parse_pipeline(std::string_view text, const std::string& key) {
  for (auto p : {Pipeline::kPretrain, Pipeline::kSweep, Pipeline::kHistogram, Pipeline::kGlobality,
                 Pipeline::kMatrix, Pipeline::kAll}) {
    if (to_string(p) == text) return p;
  }
  throw ConfigError(key, "unknown pipeline '" + std::string(text) + "'");
}

data::GrammarSpec RunConfig::grammar() const {
  auto g = data::GrammarSpec::standard();
  g.p_adjective = p_adjective;
  g.p_pp = p_pp;
  g.p_transitive = p_transitive;
  return g;
}

model::ModelConfig RunConfig::model_config() const {
  auto c = model;
  c.vocab_size = grammar().vocab().size();
  return c;
}

void RunConfig::validate() const {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("run.name", "must be a non-empty plain directory name");
  }
  if (threads == 0) throw ConfigError("run.threads", "must be at least 1");
  try {
    model_config().validate();
  } catch (const ConfigError& e) {
    throw ConfigError("model." + e.key(), e.what());
  }
  for (auto [key, p] : {std::pair{"data.p_adjective", p_adjective}, std::pair{"data.p_pp", p_pp},
                        std::pair{"data.p_transitive", p_transitive}}) {
    if (p < 0 || p > 1) throw ConfigError(key, "must be a probability");
  }
  if (n_sentences == 0) throw ConfigError("data.n_sentences", "must be positive");
  if (n_pairs == 0) throw ConfigError("data.n_pairs", "must be positive");
  if (batch_size == 0) throw ConfigError("pretrain.batch_size", "must be positive");
  if (lr <= 0) throw ConfigError("pretrain.lr", "must be positive");
  if (mask_rate <= 0 || mask_rate > 1) throw ConfigError("pretrain.mask_rate", "must be in (0, 1]");
  if (target_accuracy < 0 || target_accuracy > 1) {
    throw ConfigError("pretrain.target_accuracy", "must be in [0, 1]");
  }
  if (target_accuracy > 0 && eval_every == 0) {
    throw ConfigError("pretrain.eval_every", "must be positive when target_accuracy is set");
  }
  if (eval_every > 0 && eval_pairs == 0) throw ConfigError("pretrain.eval_pairs", "must be positive");
  if (shift_step <= 0) throw ConfigError("sweep.step", "must be positive");
  if (train_shifts.empty()) throw ConfigError("finetune.train_shifts", "needs at least one shift");
  if (finetune_batch == 0) throw ConfigError("finetune.batch_size", "must be positive");
  if (finetune_lr <= 0) throw ConfigError("finetune.lr", "must be positive");
  if (n_train < 2) throw ConfigError("finetune.n_train", "needs at least two sentences");
  if (n_validation == 0) throw ConfigError("finetune.n_validation", "must be positive");
  if (globality_sentences == 0) throw ConfigError("globality.n_sentences", "must be positive");
}

const std::vector<std::pair<std::string, std::string>>& config_reference() {
  static const auto ref = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.path, f.doc);
    return out;
  }();
  return ref;
}

void set_value(RunConfig& config, const std::string& key_path, const std::string& value) {
  field(key_path).set(config, value, key_path);
}

std::string get_value(const RunConfig& config, const std::string& key_path) {
  return field(key_path).get(config);
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", "malformed config: " + e.message() + " (line " +
                              std::to_string(e.line()) + ")");
  }
  for (const auto& [section, entries] : tree) {
    if (!entries.data().empty()) throw ConfigError(section, "key outside any section");
    for (const auto& [key, value] : entries) {
      set_value(base, section + "." + key, value.data());
    }
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path.string());
  return parse_run_config(in, std::move(base));
}

void apply_env_overrides(RunConfig& config, const EnvLookup& lookup) {
  for (const auto& f : fields()) {
    std::string var = "POSPHASE_" + f.path;
    for (auto& ch : var) ch = ch == '.' ? '_' : static_cast<char>(std::toupper(ch));
    const char* value = lookup ? lookup(var.c_str()) : std::getenv(var.c_str());
    if (value) set_value(config, f.path, value);
  }
}

std::map<std::string, std::map<std::string, std::string>> config_snapshot(const RunConfig& config) {
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& f : fields()) {
    const auto dot = f.path.find('.');
    out[f.path.substr(0, dot)][f.path.substr(dot + 1)] = f.get(config);
  }
  return out;
}

void write_run_config(std::ostream& out, const RunConfig& config) {
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.path.find('.');
    if (f.path.substr(0, dot) != section) {
      if (!section.empty()) out << '\n';
      section = f.path.substr(0, dot);
      out << '[' << section << "]\n";
    }
    out << "; " << f.doc << '\n' << f.path.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
}

}  // namespace posphase::cli
