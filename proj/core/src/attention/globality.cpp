#include "posphase/attention/globality.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "posphase/csv.hpp"
#include "posphase/errors.hpp"
#include "posphase/numerics/tensor.hpp"
#include "posphase/parallel.hpp"

namespace posphase::attention {

double head_globality(std::span<const double> attention, std::size_t n) {
  if (n < 2) throw ShapeError("head_globality needs at least two tokens");
  if (attention.size() != n * n) throw ShapeError("head_globality: expected an n x n matrix");
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = attention[i * n + j];
      row_sum += a;
      total += a * static_cast<double>(i > j ? i - j : j - i);
    }
    if (std::abs(row_sum - 1.0) > 1e-4) {
      throw UsageError("head_globality: row " + std::to_string(i) + " sums to " +
                       std::to_string(row_sum));
    }
  }
  return total / static_cast<double>(n) / static_cast<double>(n - 1);
}

namespace {

std::vector<double> drop_specials(std::span<const double> attention, std::size_t n,
                                  const std::vector<model::TokenId>& tokens, std::size_t& kept) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!model::is_special(tokens[i])) keep.push_back(i);
  }
  kept = keep.size();
  std::vector<double> out(kept * kept);
  for (std::size_t a = 0; a < kept; ++a) {
    double row_sum = 0;
    for (std::size_t b = 0; b < kept; ++b) {
      out[a * kept + b] = attention[keep[a] * n + keep[b]];
      row_sum += out[a * kept + b];
    }
    if (row_sum > 0) {
      for (std::size_t b = 0; b < kept; ++b) out[a * kept + b] /= row_sum;
    } else {
      out[a * kept + a] = 1.0;  // no mass on content tokens: treat as self-attention
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> globality_summary(const model::Transformer& model,
                                                   const std::vector<data::Sentence>& sentences,
                                                   const phaseshift::ShiftSpec& spec,
                                                   const GlobalityOptions& options) {
  if (sentences.empty()) throw UsageError("globality_summary: no sentences");
  const auto& cfg = model.config();
  const std::size_t layers = cfg.n_layers, heads = cfg.n_heads;

  std::vector<std::vector<double>> per_sentence(sentences.size());
  parallel_for(sentences.size(), options.threads, [&](std::size_t s) {
    numerics::NoGradGuard guard;
    const auto seq = phaseshift::apply_template(sentences[s], spec, cfg.context_window);
    const auto result = model.forward(seq, /*capture_attention=*/true);
    auto& values = per_sentence[s];
    values.resize(layers * heads);
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t h = 0; h < heads; ++h) {
        auto matrix = result.attention.matrix(l, h);
        if (options.exclude_specials) {
          std::size_t kept = 0;
          auto reduced = drop_specials(matrix, seq.size(), seq.token_ids, kept);
          values[l * heads + h] = head_globality(reduced, kept);
        } else {
          values[l * heads + h] = head_globality(matrix, seq.size());
        }
      }
    }
  });

  std::vector<std::vector<double>> summary(layers, std::vector<double>(heads, 0.0));
  for (const auto& values : per_sentence) {
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t h = 0; h < heads; ++h) summary[l][h] += values[l * heads + h];
    }
  }
  for (auto& layer : summary) {
    for (auto& v : layer) v /= static_cast<double>(sentences.size());
    std::sort(layer.begin(), layer.end());
  }
  return summary;
}

std::vector<GlobalityRow> compare_globality_across_shifts(
    const model::Transformer& model, const std::vector<data::Sentence>& sentences,
    const std::vector<std::int32_t>& shifts, const phaseshift::ShiftSpec& base,
    const GlobalityOptions& options) {
  std::vector<GlobalityRow> rows;
  for (std::int32_t k : shifts) {
    const auto summary = globality_summary(model, sentences, base.with_k(k), options);
    for (std::size_t l = 0; l < summary.size(); ++l) {
      for (std::size_t r = 0; r < summary[l].size(); ++r) {
        rows.push_back({l, r, k, summary[l][r]});
      }
    }
  }
  return rows;
}

void write_globality_csv(std::ostream& out, const std::string& model_id,
                         const std::vector<GlobalityRow>& rows) {
  write_globality_csv(out, {{model_id, rows}});
}

void write_globality_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, std::vector<GlobalityRow>>>& runs) {
  CsvTable table;
  table.header = {"model_id", "layer", "head_rank", "k", "value"};
  for (const auto& [model_id, rows] : runs) {
    for (const auto& r : rows) {
      table.rows.push_back({model_id, std::to_string(r.layer), std::to_string(r.head_rank),
                            std::to_string(r.k), format_real(r.value)});
    }
  }
  write_csv(out, table);
}

}  // namespace posphase::attention
