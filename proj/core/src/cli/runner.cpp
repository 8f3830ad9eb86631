#include "posphase/cli/runner.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "posphase/attention/globality.hpp"
#include "posphase/cli/charts.hpp"
#include "posphase/csv.hpp"
#include "posphase/data/corpus.hpp"
#include "posphase/errors.hpp"
#include "posphase/finetune/finetune.hpp"
#include "posphase/model/checkpoint.hpp"
#include "posphase/scoring/sweep.hpp"

#ifndef POSPHASE_VERSION
#define POSPHASE_VERSION "unknown"
#endif
#ifndef POSPHASE_GIT_COMMIT
#define POSPHASE_GIT_COMMIT ""
#endif

namespace posphase::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Longest sentence the grammar emits plus the [CLS][EOS] prefix.
constexpr std::size_t kMaxTemplated = 13;

void emit(const Logger& log, const std::string& line) {
  if (log) log(line);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

phaseshift::ShiftSpec base_shift(const RunConfig& config) {
  phaseshift::ShiftSpec spec;
  spec.pin_first = config.pin_first;
  return spec;
}

class Manifest {
 public:
  Manifest(fs::path path, const RunConfig& config) : path_(std::move(path)) {
    doc_["name"] = config.name;
    doc_["pipeline"] = std::string(to_string(config.pipeline));
    doc_["status"] = "running";
    doc_["code_version"] = code_version();
    doc_["started_utc"] = utc_now();
    doc_["config"] = config_snapshot(config);
    json seeds = json::object();
    seeds["pretrain"] = config.seeds;
    seeds["finetune"] = config.finetune_seeds;
    json derived = json::object();
    for (auto s : config.seeds) {
      const auto d = derive_seeds(s);
      derived[std::to_string(s)] = {{"sentences", d.sentences},   {"pairs", d.pairs},
                                    {"eval_pairs", d.eval_pairs}, {"globality", d.globality},
                                    {"task", d.task}};
    }
    seeds["derived"] = derived;
    doc_["seeds"] = seeds;
    doc_["outputs"] = json::array();
    flush();
  }

  void add_output(const std::string& name) {
    doc_["outputs"].push_back(name);
    flush();
  }

  void finish(const std::string& status, double wall, const std::string& error = {}) {
    doc_["status"] = status;
    doc_["wall_time_seconds"] = wall;
    if (!error.empty()) doc_["error"] = error;
    flush();
  }

 private:
  void flush() { write_text(path_, doc_.dump(2) + "\n"); }

  fs::path path_;
  json doc_;
};

struct Context {
  const RunConfig& config;
  fs::path dir;
  Manifest& manifest;
  std::vector<std::string> outputs;
  const Logger& log;

  void write(const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    record(name);
  }

  void record(const std::string& name) {
    outputs.push_back(name);
    manifest.add_output(name);
  }
};

std::string csv_text(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

// Loads the checkpoint named by checkpoint.load, with {seed} substituted.
model::Transformer load_model(const RunConfig& c, std::uint64_t seed, const Logger& log) {
  std::string path = c.load;
  const auto at = path.find("{seed}");
  if (at != std::string::npos) path.replace(at, 6, std::to_string(seed));
  emit(log, "loading " + path);
  auto m = model::load_checkpoint(path);
  if (m.config().vocab_size != c.model_config().vocab_size) {
    throw ConfigError("checkpoint.load", "checkpoint vocabulary does not match the grammar");
  }
  return m;
}

}  // namespace

std::string code_version() {
  std::string v = POSPHASE_VERSION;
  const std::string commit = POSPHASE_GIT_COMMIT;
  if (!commit.empty()) v += "+" + commit;
  return v;
}

DerivedSeeds derive_seeds(std::uint64_t seed) {
  const std::uint64_t base = seed * 1000;
  return {seed, base + 1, base + 2, base + 3, base + 4};
}

std::string model_id(const RunConfig& config, std::uint64_t seed) {
  return config.name + "-s" + std::to_string(seed);
}

std::vector<std::int32_t> resolve_shifts(const RunConfig& config) {
  if (!config.shifts.empty()) return config.shifts;
  return phaseshift::default_shifts(config.model.context_window, kMaxTemplated, config.shift_step);
}

PretrainResult pretrain(const RunConfig& config, std::uint64_t seed, const Logger& log) {
  config.validate();
  const auto grammar = config.grammar();
  const auto seeds = derive_seeds(seed);
  const auto sentences = data::gen_sentences(grammar, config.n_sentences, seeds.sentences);
  std::vector<model::TokenSequence> corpus;
  const std::size_t T = config.model.context_window;
  if (config.layout == CorpusLayout::kPacked) {
    for (const auto& w : data::pack_corpus(sentences, T)) corpus.push_back(w.to_sequence());
  } else {
    corpus = data::fixed_start_corpus(sentences, T);
  }

  PretrainResult result{model::build_model(config.model_config(), seed), {}, {}};
  const auto eval_pairs = data::gen_minimal_pairs(grammar, config.eval_pairs, seeds.eval_pairs);
  const auto spec = base_shift(config);

  model::TrainOptions opts;
  opts.steps = config.steps;
  opts.batch_size = config.batch_size;
  opts.adam.lr = config.lr;
  opts.clip_norm = config.clip_norm;
  opts.mask_rate = config.mask_rate;
  opts.seed = seed;
  opts.eval_every = config.eval_every;
  if (config.eval_every > 0) {
    opts.should_stop = [&](std::size_t step) {
      const double acc = scoring::pair_accuracy(result.model, eval_pairs, spec, config.threads);
      result.eval_log.emplace_back(step, acc);
      emit(log, model_id(config, seed) + " step " + std::to_string(step) +
                    " k=0 accuracy " + format_real(acc));
      return config.target_accuracy > 0 && acc >= config.target_accuracy;
    };
  }
  emit(log, "pretraining " + model_id(config, seed) + " on " + std::to_string(corpus.size()) +
                " sequences");
  result.report = model::train_language_model(result.model, corpus, opts);
  return result;
}

RunOutcome run(const RunConfig& config, const Logger& log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const fs::path dir = config.out_dir / config.name;
  fs::create_directories(dir);
  Manifest manifest(dir / "manifest.json", config);
  Context ctx{config, dir, manifest, {}, log};

  try {
    std::ostringstream snapshot;
    write_run_config(snapshot, config);
    ctx.write("config.cfg", snapshot.str());

    const auto p = config.pipeline;
    const bool all = p == Pipeline::kAll;
    const bool want_sweep = all || p == Pipeline::kSweep || p == Pipeline::kHistogram;
    const bool want_hist = all || p == Pipeline::kHistogram;
    const bool want_glob = all || p == Pipeline::kGlobality;
    const bool want_matrix = all || p == Pipeline::kMatrix;

    const auto grammar = config.grammar();
    const auto shifts = resolve_shifts(config);
    const auto spec = base_shift(config);

    CsvTable train_log{{"model_id", "step", "loss"}, {}};
    CsvTable eval_log{{"model_id", "step", "pair_accuracy_k0"}, {}};
    std::vector<scoring::SweepResult> sweeps;
    std::vector<std::size_t> hist_counts(shifts.size(), 0);
    std::vector<std::pair<std::string, std::vector<attention::GlobalityRow>>> globality;
    std::vector<finetune::PhaseMatrix> matrices;

    for (const auto seed : config.seeds) {
      const std::string id = model_id(config, seed);
      const auto seeds = derive_seeds(seed);
      model::Transformer m = [&] {
        if (!config.load.empty()) return load_model(config, seed, log);
        auto result = pretrain(config, seed, log);
        for (const auto& [step, loss] : result.report.loss_log) {
          train_log.rows.push_back({id, std::to_string(step), format_real(loss)});
        }
        for (const auto& [step, acc] : result.eval_log) {
          eval_log.rows.push_back({id, std::to_string(step), format_real(acc)});
        }
        if (config.save) {
          model::save_checkpoint(dir / (id + ".ckpt"), result.model);
          ctx.record(id + ".ckpt");
        }
        return std::move(result.model);
      }();

      if (want_sweep) {
        emit(log, id + ": phase sweep over " + std::to_string(shifts.size()) + " shifts");
        const auto pairs = data::gen_minimal_pairs(grammar, config.n_pairs, seeds.pairs);
        auto sweep = scoring::phase_sweep(m, pairs, shifts, spec, config.threads);
        sweep.model_id = id;
        sweep.pe_scheme = std::string(model::to_string(m.config().pe_scheme));
        sweep.seed = seed;
        if (want_hist) {
          const auto counts = scoring::best_phase_histogram(sweep.per_item, sweep.shifts);
          for (std::size_t i = 0; i < counts.size(); ++i) hist_counts[i] += counts[i];
          ctx.write("per_item_" + id + ".csv",
                    csv_text([&](std::ostream& o) { scoring::write_per_item_csv(o, sweep); }));
        }
        sweeps.push_back(std::move(sweep));
      }
      if (want_glob) {
        emit(log, id + ": attention globality");
        const auto sentences =
            data::gen_sentences(grammar, config.globality_sentences, seeds.globality);
        attention::GlobalityOptions opts;
        opts.exclude_specials = config.exclude_specials;
        opts.threads = config.threads;
        const auto glob_shifts = config.globality_shifts.empty() ? shifts : config.globality_shifts;
        globality.emplace_back(
            id, attention::compare_globality_across_shifts(m, sentences, glob_shifts, spec, opts));
      }
      if (want_matrix) {
        emit(log, id + ": cross-phase fine-tuning");
        auto task = finetune::make_agreement_task(grammar, config.n_train, config.n_validation,
                                                  seeds.task);
        task.task_id = "agreement@" + id;
        finetune::FinetuneHyper hyper;
        hyper.steps = config.finetune_steps;
        hyper.batch_size = config.finetune_batch;
        hyper.lr = config.finetune_lr;
        hyper.freeze_positions = config.freeze_positions;
        const auto eval_shifts =
            config.eval_shifts.empty() ? config.train_shifts : config.eval_shifts;
        matrices.push_back(finetune::cross_phase_matrix(m, task, config.train_shifts, eval_shifts,
                                                        config.finetune_seeds, spec, hyper,
                                                        config.threads));
      }
    }

    if (config.load.empty()) {
      ctx.write("pretrain.csv", csv_text([&](std::ostream& o) { write_csv(o, train_log); }));
      if (!eval_log.rows.empty()) {
        ctx.write("pretrain_eval.csv", csv_text([&](std::ostream& o) { write_csv(o, eval_log); }));
      }
    }
    if (want_sweep) {
      ctx.write("sweep.csv", csv_text([&](std::ostream& o) { scoring::write_sweep_csv(o, sweeps); }));
      if (config.charts) ctx.write("sweep.svg", sweep_chart(read_csv(dir / "sweep.csv")));
    }
    if (want_hist) {
      ctx.write("histogram.csv", csv_text([&](std::ostream& o) {
                  scoring::write_histogram_csv(o, shifts, hist_counts);
                }));
      if (config.charts) {
        ctx.write("histogram.svg", histogram_chart({{config.name, read_csv(dir / "histogram.csv")}}));
      }
    }
    if (want_glob) {
      ctx.write("globality.csv",
                csv_text([&](std::ostream& o) { attention::write_globality_csv(o, globality); }));
      if (config.charts) ctx.write("globality.svg", globality_chart(read_csv(dir / "globality.csv")));
    }
    if (want_matrix) {
      ctx.write("matrix.csv",
                csv_text([&](std::ostream& o) { finetune::write_matrix_csv(o, matrices); }));
      if (config.charts) {
        std::size_t i = 0;
        for (const auto& [task, svg] : matrix_charts(read_csv(dir / "matrix.csv"))) {
          (void)task;
          ctx.write("matrix_" + std::to_string(i++) + ".svg", svg);
        }
      }
    }
  } catch (const std::exception& e) {
    manifest.finish("failed", elapsed(), e.what());
    throw;
  }
  const double wall = elapsed();
  manifest.finish("ok", wall);
  return {dir, ctx.outputs, wall};
}

std::vector<std::string> report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw UsageError("report needs at least one run directory");
  struct Run {
    std::string name;
    fs::path dir;
    std::set<std::string> outputs;
  };
  std::vector<Run> runs;
  for (const auto& d : run_dirs) {
    std::ifstream in(d / "manifest.json");
    if (!in) throw IoError("missing manifest: " + (d / "manifest.json").string());
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw IoError("malformed manifest " + (d / "manifest.json").string() + ": " + e.what());
    }
    Run r{doc.value("name", d.filename().string()), d, {}};
    for (const auto& o : doc.value("outputs", json::array())) r.outputs.insert(o.get<std::string>());
    runs.push_back(std::move(r));
  }

  fs::create_directories(out_dir);
  std::vector<std::string> written;
  const auto save = [&](const std::string& name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(name);
  };
  const auto tables = [&](const std::string& file) {
    std::vector<std::pair<std::string, CsvTable>> out;
    for (const auto& r : runs) {
      if (r.outputs.count(file)) out.emplace_back(r.name, read_csv(r.dir / file));
    }
    return out;
  };
  const auto concat = [](const std::vector<std::pair<std::string, CsvTable>>& parts,
                         const std::string& file) {
    CsvTable merged{parts.front().second.header, {}};
    for (const auto& [name, t] : parts) {
      if (t.header != merged.header) {
        throw UsageError("run " + name + " has a different " + file + " layout");
      }
      merged.rows.insert(merged.rows.end(), t.rows.begin(), t.rows.end());
    }
    return merged;
  };

  if (auto parts = tables("sweep.csv"); !parts.empty()) {
    std::string metric;
    for (const auto& [name, t] : parts) {
      const auto col = t.column("metric");
      for (const auto& row : t.rows) {
        if (metric.empty()) metric = row[col];
        if (row[col] != metric) {
          throw UsageError("incompatible metric names across runs: '" + metric + "' vs '" +
                           row[col] + "' (run " + name + ")");
        }
      }
    }
    const auto merged = concat(parts, "sweep.csv");
    save("report_sweep.csv", csv_text([&](std::ostream& o) { write_csv(o, merged); }));
    save("report_sweep.svg", sweep_chart(merged));
  }
  if (auto parts = tables("histogram.csv"); !parts.empty()) {
    CsvTable merged{{"run", "k", "count", "fraction"}, {}};
    for (const auto& [name, t] : parts) {
      for (const auto& row : t.rows) {
        merged.rows.push_back({name, row[t.column("k")], row[t.column("count")],
                               row[t.column("fraction")]});
      }
    }
    save("report_histogram.csv", csv_text([&](std::ostream& o) { write_csv(o, merged); }));
    save("report_histogram.svg", histogram_chart(parts));
  }
  if (auto parts = tables("globality.csv"); !parts.empty()) {
    const auto merged = concat(parts, "globality.csv");
    save("report_globality.csv", csv_text([&](std::ostream& o) { write_csv(o, merged); }));
    save("report_globality.svg", globality_chart(merged));
  }
  if (auto parts = tables("matrix.csv"); !parts.empty()) {
    const auto merged = concat(parts, "matrix.csv");
    save("report_matrix.csv", csv_text([&](std::ostream& o) { write_csv(o, merged); }));
    std::size_t i = 0;
    for (const auto& [task, svg] : matrix_charts(merged)) {
      (void)task;
      save("report_matrix_" + std::to_string(i++) + ".svg", svg);
    }
  }
  if (written.empty()) throw UsageError("no figure CSVs found in the given runs");
  return written;
}

}  // namespace posphase::cli
