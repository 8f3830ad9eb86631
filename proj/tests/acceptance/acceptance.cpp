// Acceptance suite: one PASS/FAIL line per criterion.
//
//   posphase_acceptance [--cache DIR] [--threads N] [criterion...]
//
// With no criteria every one runs. Pretrained models are cached in DIR keyed
// by a hash of their full run config, so criteria that share models (the
// phase-shift reproduction, the packing comparison, the cross-phase matrix)
// can run as separate processes without retraining. Training is
// deterministic, so a cache hit and a fresh run give identical models.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "posphase/attention/globality.hpp"
#include "posphase/cli/config.hpp"
#include "posphase/cli/runner.hpp"
#include "posphase/csv.hpp"
#include "posphase/data/grammar.hpp"
#include "posphase/finetune/finetune.hpp"
#include "posphase/model/checkpoint.hpp"
#include "posphase/model/training.hpp"
#include "posphase/scoring/sweep.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace posphase;
using model::AttentionMode;
using model::PeScheme;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  fs::path cache = "acceptance_cache";
  std::size_t threads = 1;
};

Options g_options;

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0 ? 0 : std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// Shared experiment configurations

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

// 2 layers, d=64, 4 heads, T=256, causal learned APE. A fixed budget of 1000
// steps; the criteria then require k=0 pair accuracy >= 0.90 on the final
// model. Stopping at the first check above 0.90 (as early as step 100) leaves
// the position table barely trained and the bias seed-dependent.
cli::RunConfig fixed_start_config() {
  cli::RunConfig c;
  c.name = "fixed";
  c.model.d_model = 64;
  c.model.n_layers = 2;
  c.model.n_heads = 4;
  c.model.context_window = 256;
  c.model.pe_scheme = PeScheme::kLearnedApe;
  c.model.attention_mode = AttentionMode::kCausal;
  c.layout = cli::CorpusLayout::kFixedStart;
  c.n_sentences = 20000;
  c.n_pairs = 500;
  c.steps = 1000;
  c.batch_size = 32;
  c.lr = 1e-2;
  c.eval_every = 0;
  c.eval_pairs = 200;
  c.target_accuracy = 0;
  c.shift_step = 32;
  c.threads = g_options.threads;
  return c;
}

// Same architecture and step budget, trained on packed windows. A window holds
// about 20 sentences, so 4 windows per step already exceed the fixed-start
// batch of 32 sentences; the larger step size of 1e-2 trains poorly on them.
cli::RunConfig packed_config() {
  auto c = fixed_start_config();
  c.name = "packed";
  c.layout = cli::CorpusLayout::kPacked;
  c.batch_size = 4;
  c.lr = 3e-3;
  return c;
}

cli::RunConfig relative_config() {
  auto c = fixed_start_config();
  c.name = "relative";
  c.model.pe_scheme = PeScheme::kRelative;
  return c;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_key(cli::RunConfig c) {
  c.threads = 1;  // never affects results
  std::ostringstream text;
  cli::write_run_config(text, c);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.str())));
  return buf;
}

struct Pretrained {
  model::Transformer model;
  std::size_t steps = 0;
  bool cached = false;
};

Pretrained pretrained(const cli::RunConfig& c, std::uint64_t seed) {
  fs::create_directories(g_options.cache);
  const std::string stem = c.name + "-" + config_key(c) + "-s" + std::to_string(seed);
  const fs::path ckpt = g_options.cache / (stem + ".ckpt");
  const fs::path info = g_options.cache / (stem + ".txt");
  if (fs::exists(ckpt) && fs::exists(info)) {
    std::ifstream in(info);
    Pretrained p{model::load_checkpoint(ckpt), 0, true};
    in >> p.steps;
    return p;
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto result = cli::pretrain(c, seed);
  Pretrained p{std::move(result.model), result.report.steps_run, false};
  model::save_checkpoint(ckpt, p.model);
  std::ofstream(info) << p.steps << '\n';
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "  trained " << stem << ": " << p.steps << " steps, " << fmt(secs, 3) << " s\n";
  return p;
}

struct ShiftProfile {
  std::size_t steps = 0;
  double acc0 = 0, acc128 = 0;
  double zero_fraction = 0;
  scoring::SweepResult sweep;
};

ShiftProfile profile(const cli::RunConfig& c, std::uint64_t seed) {
  auto p = pretrained(c, seed);
  const auto pairs =
      data::gen_minimal_pairs(c.grammar(), c.n_pairs, cli::derive_seeds(seed).pairs);
  const auto shifts = cli::resolve_shifts(c);
  ShiftProfile out;
  out.steps = p.steps;
  out.sweep = scoring::phase_sweep(p.model, pairs, shifts, phaseshift::ShiftSpec{}, c.threads);
  const auto at = [&](std::int32_t k) {
    const auto it = std::find(shifts.begin(), shifts.end(), k);
    return out.sweep.values.at(static_cast<std::size_t>(it - shifts.begin()));
  };
  out.acc0 = at(0);
  out.acc128 = at(128);
  const auto hist = scoring::best_phase_histogram(out.sweep.per_item, shifts);
  std::size_t total = 0;
  for (auto n : hist) total += n;
  out.zero_fraction = static_cast<double>(hist[0]) / static_cast<double>(total);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep = "; ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

Outcome gradient_correctness() {
  std::vector<std::string> worst;
  bool pass = true;
  double max32 = 0, max64 = 0;
  for (auto scheme : testing::kAllSchemes) {
    for (auto mode : testing::kAllModes) {
      const auto cfg = testing::tiny_config(scheme, mode);
      const std::vector<model::TokenSequence> batch{testing::random_sequence(5, 20, 11),
                                                    testing::random_sequence(3, 20, 12, 4)};
      numerics::GradCheckOptions opts;
      opts.samples_per_tensor = std::numeric_limits<std::size_t>::max();
      opts.fourth_order = true;

      opts.h = 1e-3;
      const auto r32 = model::check_model_gradients(model::build_model<float>(cfg, 7),
                                                    std::span(batch), opts, 0.4, 3);
      opts.h = 1e-5;
      const auto r64 = model::check_model_gradients(model::build_model<double>(cfg, 7),
                                                    std::span(batch), opts, 0.4, 3);
      max32 = std::max(max32, r32.max_relative_error);
      max64 = std::max(max64, r64.max_relative_error);
      const bool ok = r32.max_relative_error < 1e-3 && r64.max_relative_error < 1e-6;
      if (!ok) {
        worst.push_back(std::string(model::to_string(scheme)) + "/" +
                        std::string(model::to_string(mode)) + " 32-bit " +
                        fmt(r32.max_relative_error) + " (" + r32.worst_parameter + "), 64-bit " +
                        fmt(r64.max_relative_error) + " (" + r64.worst_parameter + ")");
      }
      pass = pass && ok;
    }
  }
  return {pass, "max relative error 32-bit " + fmt(max32) + " (< 1e-3), 64-bit " + fmt(max64) +
                    " (< 1e-6) over 4 schemes x 2 modes, every entry, five-point central differences" +
                    (worst.empty() ? "" : "; " + join(worst))};
}

// ---------------------------------------------------------------------------
// 2. Exact invariance for relative / none

Outcome exact_invariance() {
  const std::size_t T = 256;
  const std::vector<std::int32_t> shifts = {0, static_cast<std::int32_t>(T / 4),
                                            static_cast<std::int32_t>(T / 2)};
  const auto grammar = data::GrammarSpec::standard();
  const auto pairs = data::gen_minimal_pairs(grammar, 100, 21);
  const auto sentences = data::gen_sentences(grammar, 20, 22);
  const auto task = finetune::make_agreement_task(grammar, 64, 64, 23);
  double worst = 0;
  std::vector<std::string> failures;
  for (auto scheme : {PeScheme::kRelative, PeScheme::kNone}) {
    for (auto mode : testing::kAllModes) {
      auto c = fixed_start_config();
      c.model.pe_scheme = scheme;
      c.model.attention_mode = mode;
      c.steps = 60;
      c.eval_every = 0;
      c.target_accuracy = 0;
      c.n_sentences = 2000;
      auto m = cli::pretrain(c, 5).model;
      const std::string tag =
          std::string(model::to_string(scheme)) + "/" + std::string(model::to_string(mode));
      double local = 0;

      const auto sweep = scoring::phase_sweep(m, pairs, shifts, {}, g_options.threads);
      for (double v : sweep.values) local = std::max(local, rel_diff(v, sweep.values[0]));
      for (const auto& row : sweep.per_item) {
        for (double v : row) local = std::max(local, rel_diff(v, row[0]));
      }
      attention::GlobalityOptions gopts;
      gopts.threads = g_options.threads;
      const auto glob = attention::compare_globality_across_shifts(m, sentences, shifts, {}, gopts);
      const std::size_t per_k = glob.size() / shifts.size();
      for (std::size_t i = 0; i < glob.size(); ++i) {
        local = std::max(local, rel_diff(glob[i].value, glob[i % per_k].value));
      }
      finetune::FinetuneHyper hyper;
      hyper.steps = 20;
      hyper.batch_size = 8;
      hyper.lr = 1e-3;
      const auto matrix = finetune::cross_phase_matrix(m, task, shifts, shifts, {1}, {}, hyper,
                                                       g_options.threads);
      for (const auto& row : matrix.mean) {
        for (double v : row) local = std::max(local, rel_diff(v, row[0]));
      }
      worst = std::max(worst, local);
      if (local > 1e-6) failures.push_back(tag + " " + fmt(local));
    }
  }
  return {failures.empty(),
          "max relative deviation across k in {0, 64, 128}: " + fmt(worst) +
              " (<= 1e-6; sweep accuracies, per-item ppl, globality, matrix rows)" +
              (failures.empty() ? "" : "; " + join(failures))};
}

// ---------------------------------------------------------------------------
// 3. Zero-position bias and 4. packing mitigation

std::map<std::uint64_t, ShiftProfile> g_fixed_profiles;

const ShiftProfile& fixed_profile(std::uint64_t seed) {
  auto it = g_fixed_profiles.find(seed);
  if (it == g_fixed_profiles.end()) {
    it = g_fixed_profiles.emplace(seed, profile(fixed_start_config(), seed)).first;
  }
  return it->second;
}

Outcome zero_position_bias() {
  std::size_t holds = 0;
  std::vector<std::string> parts;
  for (auto seed : kSeeds) {
    const auto& p = fixed_profile(seed);
    const bool reached = p.acc0 >= 0.90;
    const bool drop = p.acc0 - p.acc128 >= 0.15;
    const bool hist = p.zero_fraction >= 0.5;
    holds += reached && drop && hist;
    parts.push_back("seed " + std::to_string(seed) + ": " + std::to_string(p.steps) +
                    " steps, acc k=0 " + fmt(p.acc0, 3) + ", k=128 " + fmt(p.acc128, 3) +
                    " (drop " + fmt(p.acc0 - p.acc128, 3) + "), best phase k=0 " +
                    fmt(100 * p.zero_fraction, 3) + "%" + (reached && drop && hist ? "" : " [miss]"));
  }
  return {holds >= 2, std::to_string(holds) + "/3 seeds hold (need 2); " + join(parts)};
}

Outcome packing_mitigation() {
  double fixed_drop = 0, packed_drop = 0;
  std::vector<std::string> parts;
  for (auto seed : kSeeds) {
    const auto& f = fixed_profile(seed);
    const auto p = profile(packed_config(), seed);
    fixed_drop += f.acc0 - f.acc128;
    packed_drop += p.acc0 - p.acc128;
    parts.push_back("seed " + std::to_string(seed) + ": packed " + std::to_string(p.steps) +
                    " steps, acc k=0 " + fmt(p.acc0, 3) + ", k=128 " + fmt(p.acc128, 3) +
                    " (drop " + fmt(p.acc0 - p.acc128, 3) + " vs fixed-start " +
                    fmt(f.acc0 - f.acc128, 3) + ")");
  }
  fixed_drop /= static_cast<double>(kSeeds.size());
  packed_drop /= static_cast<double>(kSeeds.size());
  return {packed_drop < fixed_drop, "mean k=0->k=128 drop: packed " + fmt(packed_drop, 3) +
                                        " vs fixed-start " + fmt(fixed_drop, 3) + "; " +
                                        join(parts)};
}

// ---------------------------------------------------------------------------
// 5. Cross-phase degradation

finetune::FinetuneHyper finetune_hyper() {
  finetune::FinetuneHyper h;
  h.steps = 300;
  h.batch_size = 16;
  h.lr = 1e-3;
  return h;
}

Outcome cross_phase_degradation() {
  const std::vector<std::int32_t> shifts = {0, 64, 128};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const auto c = fixed_start_config();
  const auto task = finetune::make_agreement_task(c.grammar(), 1000, 500, 31);

  auto ape = pretrained(c, 1).model;
  const auto m = finetune::cross_phase_matrix(ape, task, shifts, shifts, seeds, {},
                                              finetune_hyper(), g_options.threads);
  const double diag = finetune::diagonal_mean(m), off = finetune::off_diagonal_mean(m);

  auto rel = pretrained(relative_config(), 1).model;
  const auto r = finetune::cross_phase_matrix(rel, task, shifts, shifts, {1}, {},
                                              finetune_hyper(), g_options.threads);
  double row_dev = 0;
  for (const auto& row : r.mean) {
    for (double v : row) row_dev = std::max(row_dev, rel_diff(v, row[0]));
  }
  std::string grid;
  for (std::size_t i = 0; i < m.mean.size(); ++i) {
    grid += (i ? " / " : "");
    for (std::size_t j = 0; j < m.mean[i].size(); ++j) grid += (j ? " " : "") + fmt(m.mean[i][j], 3);
  }
  return {off < diag && row_dev <= 1e-6,
          "APE diagonal mean " + fmt(diag, 3) + ", off-diagonal " + fmt(off, 3) +
              " (rows k_train 0/64/128: " + grid + "); relative rows max deviation " +
              fmt(row_dev) + " (<= 1e-6)"};
}

// ---------------------------------------------------------------------------
// 6. Scoring oracles

double rebuilt_pseudo_ppl(const model::Transformer& m, const model::TokenSequence& seq) {
  double nll = 0;
  int count = 0;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (!seq.loss_mask[t]) continue;
    model::TokenSequence copy = seq;
    copy.token_ids[t] = model::kMask;
    const auto logits = m.forward(copy).logits;
    double mx = -1e300, s = 0;
    for (std::size_t v = 0; v < logits.cols(); ++v) mx = std::max(mx, double(logits.at(t, v)));
    for (std::size_t v = 0; v < logits.cols(); ++v) s += std::exp(double(logits.at(t, v)) - mx);
    nll += mx + std::log(s) - logits.at(t, static_cast<std::size_t>(seq.token_ids[t]));
    ++count;
  }
  return std::exp(nll / count);
}

Outcome scoring_oracles() {
  double uniform_dev = 0;
  for (auto mode : testing::kAllModes) {
    for (std::size_t V : {20u, 67u}) {
      auto m = model::build_model(testing::tiny_config(PeScheme::kLearnedApe, mode, V), 1);
      for (auto& v : m.parameter("tok_emb").mutable_data()) v = 0.0f;
      for (std::uint64_t s = 0; s < 10; ++s) {
        const auto seq = testing::random_sequence(1 + s, V, s);
        const double ppl = mode == AttentionMode::kCausal ? scoring::causal_ppl(m, seq)
                                                          : scoring::pseudo_ppl(m, seq);
        uniform_dev = std::max(uniform_dev, rel_diff(ppl, static_cast<double>(V)));
      }
    }
  }
  auto masked = model::build_model(
      testing::tiny_config(PeScheme::kLearnedApe, AttentionMode::kBidirectional, 67, 64), 3);
  const auto grammar = data::GrammarSpec::standard();
  const auto sentences = data::gen_sentences(grammar, 50, 41);
  double oracle_dev = 0;
  for (const auto& s : sentences) {
    const auto seq = phaseshift::apply_template(s, {}, 64);
    oracle_dev = std::max(oracle_dev, rel_diff(scoring::pseudo_ppl(masked, seq),
                                               rebuilt_pseudo_ppl(masked, seq)));
  }
  return {uniform_dev <= 1e-12 && oracle_dev <= 1e-6,
          "uniform-logit ppl vs |V| relative deviation " + fmt(uniform_dev) +
              " (<= 1e-12); pseudo_ppl vs rebuild oracle on 50 sentences " + fmt(oracle_dev) +
              " (<= 1e-6)"};
}

// ---------------------------------------------------------------------------
// 7. Globality bounds

Outcome globality_bounds() {
  std::mt19937_64 rng(2024);
  std::exponential_distribution<double> e(1.0);
  double lo = 1, hi = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 31;
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < n; ++j) row += a[i * n + j] = e(rng);
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= row;
    }
    const double g = attention::head_globality(a, n);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  std::vector<double> eye(25, 0.0);
  for (int i = 0; i < 5; ++i) eye[i * 5 + i] = 1;
  const double identity = attention::head_globality(eye, 5);
  const double anti = attention::head_globality(std::vector<double>{0, 1, 1, 0}, 2);
  return {lo >= 0 && hi <= 1 && identity == 0.0 && anti == 1.0,
          "1000 random matrices in [" + fmt(lo) + ", " + fmt(hi) + "]; identity " +
              fmt(identity) + ", n=2 anti-diagonal " + fmt(anti)};
}

// ---------------------------------------------------------------------------
// 8. Determinism

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "posphase_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> diffs;
  std::size_t compared = 0;
  for (auto pipeline : {cli::Pipeline::kPretrain, cli::Pipeline::kSweep, cli::Pipeline::kHistogram,
                        cli::Pipeline::kGlobality, cli::Pipeline::kMatrix, cli::Pipeline::kAll}) {
    cli::RunConfig c;
    c.name = std::string(cli::to_string(pipeline));
    c.pipeline = pipeline;
    c.seeds = {1, 2};
    c.model.d_model = 32;
    c.model.n_heads = 2;
    c.model.context_window = 64;
    c.n_sentences = 400;
    c.n_pairs = 40;
    c.steps = 40;
    c.batch_size = 8;
    c.eval_every = 20;
    c.eval_pairs = 20;
    c.shift_step = 16;
    c.train_shifts = {0, 24};
    c.finetune_seeds = {1, 2};
    c.finetune_steps = 10;
    c.finetune_batch = 8;
    c.n_train = 40;
    c.n_validation = 40;
    c.globality_sentences = 10;
    c.out_dir = root / "first";
    c.threads = 1;
    const auto a = cli::run(c);
    c.out_dir = root / "second";
    c.threads = 3;
    const auto b = cli::run(c);
    for (const auto& name : a.outputs) {
      if (fs::path(name).extension() != ".csv") continue;
      std::ifstream fa(a.directory / name, std::ios::binary), fb(b.directory / name, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      ++compared;
      if (sa.str() != sb.str() || sa.str().empty()) diffs.push_back(c.name + "/" + name);
    }
  }
  fs::remove_all(root);
  return {diffs.empty() && compared > 0,
          std::to_string(compared) + " CSVs compared across reruns of all six pipelines (1 vs 3 threads)" +
              (diffs.empty() ? "" : "; differing: " + join(diffs, ", "))};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "gradient correctness", gradient_correctness},
      {2, "exact phase-shift invariance", exact_invariance},
      {3, "zero-position bias", zero_position_bias},
      {4, "packing mitigation", packing_mitigation},
      {5, "cross-phase degradation", cross_phase_degradation},
      {6, "scoring oracles", scoring_oracles},
      {7, "globality bounds", globality_bounds},
      {8, "determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cache" && i + 1 < argc) {
      g_options.cache = argv[++i];
    } else if (arg == "--threads" && i + 1 < argc) {
      g_options.threads = std::stoul(argv[++i]);
    } else if (arg == "all") {
      for (const auto& c : criteria()) wanted.insert(c.id);
    } else {
      wanted.insert(std::stoi(arg));
    }
  }
  if (wanted.empty()) {
    for (const auto& c : criteria()) wanted.insert(c.id);
  }

  int failures = 0;
  for (const auto& c : criteria()) {
    if (!wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
