#include "posphase/scoring/sweep.hpp"

#include <ostream>
#include <sstream>

#include "posphase/csv.hpp"
#include "posphase/errors.hpp"
#include "posphase/parallel.hpp"

namespace posphase::scoring {

namespace {

// Perplexities of good and bad members, interleaved.
std::vector<double> score_pairs(const Scorer& scorer, const std::vector<data::MinimalPair>& pairs,
                                const phaseshift::ShiftSpec& spec, std::size_t context_window,
                                std::size_t threads) {
  std::vector<double> out(2 * pairs.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& pair = pairs[i / 2];
    const auto& sentence = i % 2 == 0 ? pair.good : pair.bad;
    out[i] = scorer(phaseshift::apply_template(sentence, spec, context_window));
  });
  return out;
}

double accuracy_from_scores(const std::vector<double>& scores) {
  std::size_t wins = 0;
  for (std::size_t p = 0; p + 1 < scores.size(); p += 2) {
    if (scores[p] < scores[p + 1]) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(scores.size() / 2);
}

}  // namespace

double pair_accuracy(const Scorer& scorer, const std::vector<data::MinimalPair>& pairs,
                     const phaseshift::ShiftSpec& spec, std::size_t context_window,
                     std::size_t threads) {
  if (pairs.empty()) throw UsageError("pair_accuracy: no pairs");
  return accuracy_from_scores(score_pairs(scorer, pairs, spec, context_window, threads));
}

double pair_accuracy(const Transformer& model, const std::vector<data::MinimalPair>& pairs,
                     const phaseshift::ShiftSpec& spec, std::size_t threads) {
  return pair_accuracy(model_scorer(model), pairs, spec, model.config().context_window, threads);
}

SweepResult phase_sweep(const Scorer& scorer, const std::vector<data::MinimalPair>& pairs,
                        const std::vector<std::int32_t>& shifts,
                        const phaseshift::ShiftSpec& base, std::size_t context_window,
                        std::size_t threads) {
  if (pairs.empty()) throw UsageError("phase_sweep: no pairs");
  if (shifts.empty()) throw UsageError("phase_sweep: no shifts");

  std::ostringstream offending;
  std::size_t bad_count = 0;
  for (std::int32_t k : shifts) {
    const auto spec = base.with_k(k);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::size_t longest = std::max(pairs[i].good.size(), pairs[i].bad.size());
      try {
        phaseshift::validate_shift(spec, base.prefix.size() + longest, context_window);
      } catch (const RangeError&) {
        if (bad_count < 10) offending << (bad_count ? ", " : "") << "item " << i << " at k=" << k;
        ++bad_count;
      }
    }
  }
  if (bad_count) {
    throw RangeError("phase_sweep: " + std::to_string(bad_count) +
                     " (item, shift) combinations exceed the context window: " +
                     offending.str() + (bad_count > 10 ? ", ..." : ""));
  }

  SweepResult result;
  result.shifts = shifts;
  result.n_items = pairs.size();
  result.per_item.assign(2 * pairs.size(), std::vector<double>(shifts.size()));
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    auto scores = score_pairs(scorer, pairs, base.with_k(shifts[s]), context_window, threads);
    result.values.push_back(accuracy_from_scores(scores));
    for (std::size_t i = 0; i < scores.size(); ++i) result.per_item[i][s] = scores[i];
  }
  return result;
}

SweepResult phase_sweep(const Transformer& model, const std::vector<data::MinimalPair>& pairs,
                        const std::vector<std::int32_t>& shifts,
                        const phaseshift::ShiftSpec& base, std::size_t threads) {
  auto result = phase_sweep(model_scorer(model), pairs, shifts, base,
                            model.config().context_window, threads);
  result.pe_scheme = std::string(model::to_string(model.config().pe_scheme));
  return result;
}

std::vector<std::size_t> best_phase_histogram(const std::vector<std::vector<double>>& per_item,
                                              const std::vector<std::int32_t>& shifts) {
  std::vector<std::size_t> counts(shifts.size(), 0);
  for (const auto& row : per_item) {
    if (row.size() != shifts.size()) {
      throw ShapeError("best_phase_histogram: row width differs from shift count");
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < row.size(); ++s) {
      if (row[s] < row[best]) best = s;
    }
    ++counts[best];
  }
  return counts;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& sweeps) {
  CsvTable table;
  table.header = {"model_id", "pe_scheme", "k", "metric", "value", "n_items", "seed"};
  for (const auto& s : sweeps) {
    for (std::size_t i = 0; i < s.shifts.size(); ++i) {
      table.rows.push_back({s.model_id, s.pe_scheme, std::to_string(s.shifts[i]), s.metric_name,
                            format_real(s.values[i]), std::to_string(s.n_items),
                            std::to_string(s.seed)});
    }
  }
  write_csv(out, table);
}

void write_histogram_csv(std::ostream& out, const std::vector<std::int32_t>& shifts,
                         const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  CsvTable table;
  table.header = {"k", "count", "fraction"};
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const double fraction = total ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0;
    table.rows.push_back(
        {std::to_string(shifts[i]), std::to_string(counts[i]), format_real(fraction)});
  }
  write_csv(out, table);
}

void write_per_item_csv(std::ostream& out, const SweepResult& sweep) {
  CsvTable table;
  table.header = {"item", "k", "ppl"};
  for (std::size_t i = 0; i < sweep.per_item.size(); ++i) {
    for (std::size_t s = 0; s < sweep.shifts.size(); ++s) {
      table.rows.push_back({std::to_string(i), std::to_string(sweep.shifts[s]),
                            format_real(sweep.per_item[i][s])});
    }
  }
  write_csv(out, table);
}

}  // namespace posphase::scoring
