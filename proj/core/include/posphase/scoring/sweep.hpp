#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "posphase/data/grammar.hpp"
#include "posphase/phaseshift/shift.hpp"
#include "posphase/scoring/perplexity.hpp"

namespace posphase::scoring {

// Fraction of pairs whose good member scores strictly lower than the bad one,
// both templated under `spec`. Ties count as failures.
double pair_accuracy(const Scorer& scorer, const std::vector<data::MinimalPair>& pairs,
                     const phaseshift::ShiftSpec& spec, std::size_t context_window,
                     std::size_t threads = 1);
double pair_accuracy(const Transformer& model, const std::vector<data::MinimalPair>& pairs,
                     const phaseshift::ShiftSpec& spec, std::size_t threads = 1);

struct SweepResult {
  std::vector<std::int32_t> shifts;
  std::string metric_name = "pair_accuracy";
  std::vector<double> values;  // one per shift
  // Rows are scored sentences (good_0, bad_0, good_1, bad_1, ...), columns
  // follow `shifts`.
  std::vector<std::vector<double>> per_item;
  std::size_t n_items = 0;  // pairs
  std::uint64_t seed = 0;
  std::string model_id;
  std::string pe_scheme;
};

// pair_accuracy at every shift, keeping per-sentence perplexities. Before any
// scoring, throws RangeError listing the pairs that do not fit some shift.
SweepResult phase_sweep(const Scorer& scorer, const std::vector<data::MinimalPair>& pairs,
                        const std::vector<std::int32_t>& shifts,
                        const phaseshift::ShiftSpec& base, std::size_t context_window,
                        std::size_t threads = 1);
SweepResult phase_sweep(const Transformer& model, const std::vector<data::MinimalPair>& pairs,
                        const std::vector<std::int32_t>& shifts,
                        const phaseshift::ShiftSpec& base, std::size_t threads = 1);

// Per row, the index of the shift with the lowest perplexity (ties resolve to
// the earliest shift); returns counts per shift.
std::vector<std::size_t> best_phase_histogram(const std::vector<std::vector<double>>& per_item,
                                              const std::vector<std::int32_t>& shifts);

// Columns: model_id, pe_scheme, k, metric, value, n_items, seed.
void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& sweeps);
// Columns: k, count, fraction.
void write_histogram_csv(std::ostream& out, const std::vector<std::int32_t>& shifts,
                         const std::vector<std::size_t>& counts);
// Columns: item, k, ppl.
void write_per_item_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace posphase::scoring
