// Throughput of the hot paths: dense kernels, a model forward/backward pass,
// sentence scoring, a phase sweep and the globality summary.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "posphase/attention/globality.hpp"
#include "posphase/data/grammar.hpp"
#include "posphase/model/losses.hpp"
#include "posphase/model/transformer.hpp"
#include "posphase/numerics/ops.hpp"
#include "posphase/phaseshift/shift.hpp"
#include "posphase/scoring/perplexity.hpp"
#include "posphase/scoring/sweep.hpp"

namespace {

using namespace posphase;

numerics::Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                               bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> data(rows * cols);
  for (auto& v : data) v = n(rng);
  return numerics::Tensor::from_data({rows, cols}, std::move(data), requires_grad);
}

model::ModelConfig bench_config(model::PeScheme scheme, model::AttentionMode mode) {
  model::ModelConfig c;
  c.d_model = 64;
  c.n_layers = 2;
  c.n_heads = 4;
  c.context_window = 256;
  c.vocab_size = data::GrammarSpec::standard().vocab().size();
  c.pe_scheme = scheme;
  c.attention_mode = mode;
  return c;
}

model::TokenSequence sentence_sequence(std::size_t k) {
  const auto s = data::gen_sentences(data::GrammarSpec::standard(), 1, 3).front();
  return phaseshift::apply_template(s, phaseshift::ShiftSpec{}.with_k(static_cast<std::int32_t>(k)),
                                    256);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(numerics::matmul(a, b).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  auto m = model::build_model(bench_config(model::PeScheme::kLearnedApe, model::AttentionMode::kCausal), 1);
  const auto seq = sentence_sequence(0);
  for (auto _ : state) {
    for (auto& p : m.parameters()) p.tensor.zero_grad();
    const auto loss = model::causal_lm_loss(m, seq);
    numerics::backward(loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.size()));
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_CausalPpl(benchmark::State& state) {
  const auto scheme = static_cast<model::PeScheme>(state.range(0));
  const auto m = model::build_model(bench_config(scheme, model::AttentionMode::kCausal), 1);
  const auto seq = sentence_sequence(128);
  for (auto _ : state) benchmark::DoNotOptimize(scoring::causal_ppl(m, seq));
}
BENCHMARK(BM_CausalPpl)
    ->Arg(static_cast<int>(model::PeScheme::kLearnedApe))
    ->Arg(static_cast<int>(model::PeScheme::kRelative))
    ->Unit(benchmark::kMicrosecond);

void BM_PseudoPpl(benchmark::State& state) {
  const auto m = model::build_model(
      bench_config(model::PeScheme::kLearnedApe, model::AttentionMode::kBidirectional), 1);
  const auto seq = sentence_sequence(0);
  for (auto _ : state) benchmark::DoNotOptimize(scoring::pseudo_ppl(m, seq));
}
BENCHMARK(BM_PseudoPpl)->Unit(benchmark::kMicrosecond);

void BM_PhaseSweep(benchmark::State& state) {
  const auto m = model::build_model(bench_config(model::PeScheme::kLearnedApe, model::AttentionMode::kCausal), 1);
  const auto pairs = data::gen_minimal_pairs(data::GrammarSpec::standard(), 50, 5);
  const std::vector<std::int32_t> shifts = {0, 64, 128, 192};
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(scoring::phase_sweep(m, pairs, shifts, {}, threads).values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size() * shifts.size()));
}
BENCHMARK(BM_PhaseSweep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_HeadGlobality(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) row += a[i * n + j] = e(rng);
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= row;
  }
  for (auto _ : state) benchmark::DoNotOptimize(attention::head_globality(a, n));
}
BENCHMARK(BM_HeadGlobality)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
