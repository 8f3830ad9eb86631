#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posphase/data/corpus.hpp"
#include "posphase/model/transformer.hpp"
#include "posphase/phaseshift/shift.hpp"

namespace posphase::attention {

// Mean expected attention distance normalized by its maximum:
//   g = [ (1/n) Σ_i Σ_j A[i,j]·|i−j| ] / (n−1)
// 0 for self-only attention, 1 when every row attends to its farthest token
// at distance n−1 (only possible for n = 2). ShapeError if n < 2, UsageError
// if a row does not sum to 1.
double head_globality(std::span<const double> attention, std::size_t n);

struct GlobalityOptions {
  // Drop special-token rows and columns (renormalizing the rows) before
  // measuring.
  bool exclude_specials = false;
  std::size_t threads = 1;
};

// result[layer] holds one mean globality per head, sorted ascending.
std::vector<std::vector<double>> globality_summary(const model::Transformer& model,
                                                   const std::vector<data::Sentence>& sentences,
                                                   const phaseshift::ShiftSpec& spec,
                                                   const GlobalityOptions& options = {});

struct GlobalityRow {
  std::size_t layer = 0;
  std::size_t head_rank = 0;
  std::int32_t k = 0;
  double value = 0;
};

// One sorted-head curve per (layer, k): n_layers × n_heads × n_shifts rows,
// ordered by k, then layer, then rank.
std::vector<GlobalityRow> compare_globality_across_shifts(
    const model::Transformer& model, const std::vector<data::Sentence>& sentences,
    const std::vector<std::int32_t>& shifts, const phaseshift::ShiftSpec& base,
    const GlobalityOptions& options = {});

// Columns: model_id, layer, head_rank, k, value.
void write_globality_csv(std::ostream& out, const std::string& model_id,
                         const std::vector<GlobalityRow>& rows);
// Several models in one table, in the given order.
void write_globality_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, std::vector<GlobalityRow>>>& runs);

}  // namespace posphase::attention
