#include "posphase/numerics/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "posphase/errors.hpp"

namespace posphase::numerics {

namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using ConstMap = Eigen::Map<const RowMat<Real>>;
template <typename Real>
using MutMap = Eigen::Map<RowMat<Real>>;
template <typename Real>
using ConstStrided = Eigen::Map<const RowMat<Real>, 0, Eigen::OuterStride<>>;
template <typename Real>
using MutStrided = Eigen::Map<RowMat<Real>, 0, Eigen::OuterStride<>>;

template <typename Real>
ConstMap<Real> as_matrix(const BasicTensor<Real>& t) {
  return ConstMap<Real>(t.data().data(), t.rows(), t.cols());
}

template <typename Real>
MutMap<Real> grad_matrix(const BasicTensor<Real>& t) {
  return MutMap<Real>(t.mutable_grad().data(), t.rows(), t.cols());
}

template <typename Real>
void require_matrix(const BasicTensor<Real>& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " +
                     shape_string(t.shape()));
  }
}

template <typename Real>
void require_same_shape(const BasicTensor<Real>& a, const BasicTensor<Real>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " differ");
  }
}

template <typename Real>
void require_vector(const BasicTensor<Real>& v, std::size_t length, const char* op) {
  if (v.rank() != 1 || v.size() != length) {
    throw ShapeError(std::string(op) + ": expected a vector of length " +
                     std::to_string(length) + ", got " + shape_string(v.shape()));
  }
}

}  // namespace

template <typename Real>
BasicTensor<Real> matmul(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_string(a.shape()) +
                     " x " + shape_string(b.shape()));
  }
  std::vector<Real> out(m * n);
  MutMap<Real>(out.data(), m, n).noalias() = as_matrix(a) * as_matrix(b);
  return BasicTensor<Real>::make_result(
      "matmul", {m, n}, std::move(out), {a, b},
      [a, b, m, n](std::span<const Real> g) mutable {
        ConstMap<Real> dc(g.data(), m, n);
        if (a.requires_grad()) grad_matrix(a).noalias() += dc * as_matrix(b).transpose();
        if (b.requires_grad()) grad_matrix(b).noalias() += as_matrix(a).transpose() * dc;
      });
}

template <typename Real>
BasicTensor<Real> matmul_transposed(const BasicTensor<Real>& a,
                                    const BasicTensor<Real>& b) {
  require_matrix(a, "matmul_transposed");
  require_matrix(b, "matmul_transposed");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_transposed: inner dimensions differ for " +
                     shape_string(a.shape()) + " x " + shape_string(b.shape()) + "^T");
  }
  std::vector<Real> out(m * n);
  MutMap<Real>(out.data(), m, n).noalias() = as_matrix(a) * as_matrix(b).transpose();
  return BasicTensor<Real>::make_result(
      "matmul_transposed", {m, n}, std::move(out), {a, b},
      [a, b, m, n](std::span<const Real> g) mutable {
        ConstMap<Real> dc(g.data(), m, n);
        if (a.requires_grad()) grad_matrix(a).noalias() += dc * as_matrix(b);
        if (b.requires_grad()) grad_matrix(b).noalias() += dc.transpose() * as_matrix(a);
      });
}

template <typename Real>
BasicTensor<Real> linear(const BasicTensor<Real>& x, const BasicTensor<Real>& w,
                         const BasicTensor<Real>& bias) {
  require_matrix(x, "linear");
  require_matrix(w, "linear");
  const std::size_t n = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
  if (w.dim(0) != in) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " vs weight " +
                     shape_string(w.shape()));
  }
  if (bias.defined()) require_vector(bias, out_dim, "linear");
  std::vector<Real> out(n * out_dim);
  MutMap<Real> y(out.data(), n, out_dim);
  y.noalias() = as_matrix(x) * as_matrix(w);
  if (bias.defined()) {
    Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> b(bias.data().data(), out_dim);
    y.rowwise() += b;
  }
  return BasicTensor<Real>::make_result(
      "linear", {n, out_dim}, std::move(out), {x, w, bias},
      [x, w, bias, n, out_dim](std::span<const Real> g) mutable {
        ConstMap<Real> dy(g.data(), n, out_dim);
        if (x.requires_grad()) grad_matrix(x).noalias() += dy * as_matrix(w).transpose();
        if (w.requires_grad()) grad_matrix(w).noalias() += as_matrix(x).transpose() * dy;
        if (bias.defined() && bias.requires_grad()) {
          auto db = bias.mutable_grad();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < out_dim; ++j) db[j] += g[i * out_dim + j];
          }
        }
      });
}

template <typename Real>
BasicTensor<Real> add(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return BasicTensor<Real>::make_result(
      "add", a.shape(), std::move(out), {a, b}, [a, b](std::span<const Real> g) mutable {
        if (a.requires_grad()) a.accumulate_grad(g);
        if (b.requires_grad()) b.accumulate_grad(g);
      });
}

template <typename Real>
BasicTensor<Real> add_rowwise(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  const std::size_t d = a.cols();
  require_vector(b, d, "add_rowwise");
  const std::size_t rows = a.rows();
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto y = b.data();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += y[j];
  }
  return BasicTensor<Real>::make_result(
      "add_rowwise", a.shape(), std::move(out), {a, b},
      [a, b, rows, d](std::span<const Real> g) mutable {
        if (a.requires_grad()) a.accumulate_grad(g);
        if (b.requires_grad()) {
          auto db = b.mutable_grad();
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < d; ++j) db[j] += g[i * d + j];
          }
        }
      });
}

template <typename Real>
BasicTensor<Real> mul(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return BasicTensor<Real>::make_result(
      "mul", a.shape(), std::move(out), {a, b}, [a, b](std::span<const Real> g) mutable {
        auto x = a.data();
        auto y = b.data();
        if (a.requires_grad()) {
          auto da = a.mutable_grad();
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i];
        }
        if (b.requires_grad()) {
          auto db = b.mutable_grad();
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * x[i];
        }
      });
}

template <typename Real>
BasicTensor<Real> scale(const BasicTensor<Real>& a, Real factor) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return BasicTensor<Real>::make_result(
      "scale", a.shape(), std::move(out), {a}, [a, factor](std::span<const Real> g) mutable {
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * factor;
      });
}

template <typename Real>
BasicTensor<Real> sum(const BasicTensor<Real>& a) {
  Real total = 0;
  for (Real v : a.data()) total += v;
  return BasicTensor<Real>::make_result(
      "sum", {1}, {total}, {a}, [a](std::span<const Real> g) mutable {
        for (auto& v : a.mutable_grad()) v += g[0];
      });
}

template <typename Real>
BasicTensor<Real> gelu(const BasicTensor<Real>& a) {
  constexpr Real kAlpha = Real(0.7978845608028654);  // sqrt(2/pi)
  constexpr Real kBeta = Real(0.044715);
  auto x = a.data();
  std::vector<Real> out(x.size());
  std::vector<Real> tanh_cache(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real v = x[i];
    const Real t = std::tanh(kAlpha * (v + kBeta * v * v * v));
    tanh_cache[i] = t;
    out[i] = Real(0.5) * v * (Real(1) + t);
  }
  return BasicTensor<Real>::make_result(
      "gelu", a.shape(), std::move(out), {a},
      [a, tanh_cache = std::move(tanh_cache)](std::span<const Real> g) mutable {
        auto x = a.data();
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const Real v = x[i];
          const Real t = tanh_cache[i];
          const Real inner = kAlpha * (Real(1) + Real(3) * kBeta * v * v);
          const Real dy = Real(0.5) * (Real(1) + t) + Real(0.5) * v * (Real(1) - t * t) * inner;
          da[i] += g[i] * dy;
        }
      });
}

template <typename Real>
BasicTensor<Real> layer_norm(const BasicTensor<Real>& x, const BasicTensor<Real>& gain,
                             const BasicTensor<Real>& bias, Real eps) {
  const std::size_t d = x.cols();
  const std::size_t rows = x.rows();
  require_vector(gain, d, "layer_norm");
  require_vector(bias, d, "layer_norm");
  auto in = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  std::vector<Real> normalized(in.size());
  std::vector<Real> inv_std(rows);
  std::vector<Real> out(in.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = in.data() + r * d;
    Real mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= Real(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= Real(d);
    const Real is = Real(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const Real xh = (row[j] - mean) * is;
      normalized[r * d + j] = xh;
      out[r * d + j] = xh * gv[j] + bv[j];
    }
  }
  return BasicTensor<Real>::make_result(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [x, gain, bias, d, rows, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](std::span<const Real> g) mutable {
        auto gv = gain.data();
        if (gain.requires_grad() || bias.requires_grad()) {
          auto dg = gain.requires_grad() ? gain.mutable_grad() : std::span<Real>{};
          auto db = bias.requires_grad() ? bias.mutable_grad() : std::span<Real>{};
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) {
              if (!dg.empty()) dg[j] += g[r * d + j] * normalized[r * d + j];
              if (!db.empty()) db[j] += g[r * d + j];
            }
          }
        }
        if (!x.requires_grad()) return;
        auto dx = x.mutable_grad();
        std::vector<Real> dxh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          Real mean_dxh = 0, mean_dxh_xh = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dxh[j] = g[r * d + j] * gv[j];
            mean_dxh += dxh[j];
            mean_dxh_xh += dxh[j] * normalized[r * d + j];
          }
          mean_dxh /= Real(d);
          mean_dxh_xh /= Real(d);
          for (std::size_t j = 0; j < d; ++j) {
            dx[r * d + j] +=
                inv_std[r] * (dxh[j] - mean_dxh - normalized[r * d + j] * mean_dxh_xh);
          }
        }
      });
}

template <typename Real>
BasicTensor<Real> softmax_rows(const BasicTensor<Real>& m) {
  const std::size_t c = m.cols();
  const std::size_t rows = m.rows();
  auto in = m.data();
  std::vector<Real> out(in.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = in.data() + r * c;
    Real* dst = out.data() + r * c;
    const Real mx = *std::max_element(row, row + c);
    Real total = 0;
    for (std::size_t j = 0; j < c; ++j) {
      dst[j] = std::exp(row[j] - mx);
      total += dst[j];
    }
    for (std::size_t j = 0; j < c; ++j) dst[j] /= total;
  }
  auto probs = out;
  return BasicTensor<Real>::make_result(
      "softmax_rows", m.shape(), std::move(out), {m},
      [m, probs = std::move(probs), rows, c](std::span<const Real> g) mutable {
        auto dm = m.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          Real dot = 0;
          for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * probs[r * c + j];
          for (std::size_t j = 0; j < c; ++j) {
            dm[r * c + j] += probs[r * c + j] * (g[r * c + j] - dot);
          }
        }
      });
}

template <typename Real>
BasicTensor<Real> gather_rows(const BasicTensor<Real>& table,
                              std::span<const std::int32_t> ids) {
  require_matrix(table, "gather_rows");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");
  auto src = table.data();
  std::vector<Real> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw RangeError("gather_rows: id " + std::to_string(ids[i]) +
                       " outside table of " + std::to_string(vocab) + " rows");
    }
    std::copy_n(src.begin() + ids[i] * d, d, out.begin() + i * d);
  }
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return BasicTensor<Real>::make_result(
      "gather_rows", {ids.size(), d}, std::move(out), {table},
      [table, idx = std::move(idx), d](std::span<const Real> g) mutable {
        auto dt = table.mutable_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) {
          Real* dst = dt.data() + static_cast<std::size_t>(idx[i]) * d;
          for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
        }
      });
}

template <typename Real>
BasicTensor<Real> cross_entropy_logits(const BasicTensor<Real>& logits,
                                       std::span<const std::int32_t> targets,
                                       const std::vector<bool>& mask) {
  require_matrix(logits, "cross_entropy_logits");
  const std::size_t n = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != n) throw ShapeError("cross_entropy_logits: target count mismatch");
  if (!mask.empty() && mask.size() != n) {
    throw ShapeError("cross_entropy_logits: mask length mismatch");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= vocab) {
      throw RangeError("cross_entropy_logits: target " + std::to_string(targets[i]) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    ++count;
  }
  if (count == 0) throw EmptyLossError("cross_entropy_logits: every position is masked");

  auto in = logits.data();
  std::vector<Real> probs(n * vocab, Real{0});
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const Real* row = in.data() + i * vocab;
    const Real mx = *std::max_element(row, row + vocab);
    Real z = 0;
    for (std::size_t j = 0; j < vocab; ++j) {
      probs[i * vocab + j] = std::exp(row[j] - mx);
      z += probs[i * vocab + j];
    }
    for (std::size_t j = 0; j < vocab; ++j) probs[i * vocab + j] /= z;
    total += static_cast<double>(mx) + std::log(static_cast<double>(z)) -
             static_cast<double>(row[targets[i]]);
  }
  const Real loss = static_cast<Real>(total / static_cast<double>(count));
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  return BasicTensor<Real>::make_result(
      "cross_entropy_logits", {1}, {loss}, {logits},
      [logits, probs = std::move(probs), tgt = std::move(tgt), mask, count, n,
       vocab](std::span<const Real> g) mutable {
        auto dl = logits.mutable_grad();
        const Real w = g[0] / Real(count);
        for (std::size_t i = 0; i < n; ++i) {
          if (!mask.empty() && !mask[i]) continue;
          for (std::size_t j = 0; j < vocab; ++j) dl[i * vocab + j] += w * probs[i * vocab + j];
          dl[i * vocab + static_cast<std::size_t>(tgt[i])] -= w;
        }
      });
}

template <typename Real>
double log_prob(std::span<const Real> row, std::int32_t target) {
  if (target < 0 || static_cast<std::size_t>(target) >= row.size()) {
    throw RangeError("log_prob: target outside vocabulary");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Real v : row) mx = std::max(mx, static_cast<double>(v));
  double z = 0;
  for (Real v : row) z += std::exp(static_cast<double>(v) - mx);
  return static_cast<double>(row[target]) - mx - std::log(z);
}

template <typename Real>
BasicTensor<Real> multi_head_attention(const BasicTensor<Real>& qkv,
                                       const AttentionOptions<Real>& options,
                                       std::vector<Real>* probabilities) {
  require_matrix(qkv, "multi_head_attention");
  const std::size_t n = qkv.dim(0);
  const std::size_t width = qkv.dim(1);
  const std::size_t heads = options.heads;
  if (heads == 0 || width % 3 != 0 || (width / 3) % heads != 0) {
    throw ShapeError("multi_head_attention: packed width " + std::to_string(width) +
                     " incompatible with " + std::to_string(heads) + " heads");
  }
  const std::size_t d = width / 3;
  const std::size_t dh = d / heads;
  const Real scale_factor = Real(1) / std::sqrt(Real(dh));
  const bool causal = options.causal;

  const bool relative = options.relative_bias.defined();
  const std::int32_t radius = options.max_distance;
  std::vector<std::int32_t> bias_index;
  if (relative) {
    if (options.positions.size() != n) {
      throw ShapeError("multi_head_attention: relative bias needs one position per row");
    }
    const auto& rb = options.relative_bias;
    if (rb.rank() != 2 || rb.dim(0) != static_cast<std::size_t>(2 * radius + 1) ||
        rb.dim(1) != heads) {
      throw ShapeError("multi_head_attention: relative bias table has shape " +
                       shape_string(rb.shape()));
    }
    bias_index.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::int32_t delta =
            std::clamp(options.positions[i] - options.positions[j], -radius, radius);
        bias_index[i * n + j] = delta + radius;
      }
    }
  }

  const Real* base = qkv.data().data();
  std::vector<Real> probs(heads * n * n, Real{0});
  std::vector<Real> out(n * d);
  RowMat<Real> scores(n, n);
  for (std::size_t h = 0; h < heads; ++h) {
    ConstStrided<Real> q(base + h * dh, n, dh, Eigen::OuterStride<>(width));
    ConstStrided<Real> k(base + d + h * dh, n, dh, Eigen::OuterStride<>(width));
    ConstStrided<Real> v(base + 2 * d + h * dh, n, dh, Eigen::OuterStride<>(width));
    scores.noalias() = (q * k.transpose()) * scale_factor;
    if (relative) {
      auto table = options.relative_bias.data();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          scores(i, j) += table[static_cast<std::size_t>(bias_index[i * n + j]) * heads + h];
        }
      }
    }
    MutMap<Real> p(probs.data() + h * n * n, n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t visible = causal ? i + 1 : n;
      Real mx = scores(i, 0);
      for (std::size_t j = 1; j < visible; ++j) mx = std::max(mx, scores(i, j));
      Real total = 0;
      for (std::size_t j = 0; j < visible; ++j) {
        p(i, j) = std::exp(scores(i, j) - mx);
        total += p(i, j);
      }
      for (std::size_t j = 0; j < visible; ++j) p(i, j) /= total;
    }
    MutStrided<Real>(out.data() + h * dh, n, dh, Eigen::OuterStride<>(d)).noalias() = p * v;
  }
  if (probabilities) *probabilities = probs;

  auto rel_bias = options.relative_bias;
  return BasicTensor<Real>::make_result(
      "multi_head_attention", {n, d}, std::move(out), {qkv, rel_bias},
      [qkv, rel_bias, probs = std::move(probs), bias_index = std::move(bias_index), n, d, dh,
       heads, width, scale_factor, causal](std::span<const Real> g) mutable {
        const Real* base = qkv.data().data();
        const bool want_qkv = qkv.requires_grad();
        const bool want_bias = rel_bias.defined() && rel_bias.requires_grad();
        Real* dbase = want_qkv ? qkv.mutable_grad().data() : nullptr;
        std::span<Real> dbias = want_bias ? rel_bias.mutable_grad() : std::span<Real>{};
        RowMat<Real> dp(n, n);
        RowMat<Real> ds(n, n);
        for (std::size_t h = 0; h < heads; ++h) {
          ConstStrided<Real> q(base + h * dh, n, dh, Eigen::OuterStride<>(width));
          ConstStrided<Real> k(base + d + h * dh, n, dh, Eigen::OuterStride<>(width));
          ConstStrided<Real> v(base + 2 * d + h * dh, n, dh, Eigen::OuterStride<>(width));
          ConstStrided<Real> dout(g.data() + h * dh, n, dh, Eigen::OuterStride<>(d));
          ConstMap<Real> p(probs.data() + h * n * n, n, n);
          dp.noalias() = dout * v.transpose();
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t visible = causal ? i + 1 : n;
            Real dot = 0;
            for (std::size_t j = 0; j < visible; ++j) dot += dp(i, j) * p(i, j);
            for (std::size_t j = 0; j < visible; ++j) ds(i, j) = p(i, j) * (dp(i, j) - dot);
            for (std::size_t j = visible; j < n; ++j) ds(i, j) = 0;
          }
          if (want_bias) {
            for (std::size_t i = 0; i < n; ++i) {
              for (std::size_t j = 0; j < n; ++j) {
                dbias[static_cast<std::size_t>(bias_index[i * n + j]) * heads + h] += ds(i, j);
              }
            }
          }
          if (want_qkv) {
            MutStrided<Real> dq(dbase + h * dh, n, dh, Eigen::OuterStride<>(width));
            MutStrided<Real> dk(dbase + d + h * dh, n, dh, Eigen::OuterStride<>(width));
            MutStrided<Real> dv(dbase + 2 * d + h * dh, n, dh, Eigen::OuterStride<>(width));
            dv.noalias() += p.transpose() * dout;
            dq.noalias() += (ds * k) * scale_factor;
            dk.noalias() += (ds.transpose() * q) * scale_factor;
          }
        }
      });
}

#define POSPHASE_INSTANTIATE_OPS(Real)                                                        \
  template BasicTensor<Real> matmul(const BasicTensor<Real>&, const BasicTensor<Real>&);      \
  template BasicTensor<Real> matmul_transposed(const BasicTensor<Real>&,                      \
                                               const BasicTensor<Real>&);                     \
  template BasicTensor<Real> linear(const BasicTensor<Real>&, const BasicTensor<Real>&,       \
                                    const BasicTensor<Real>&);                                \
  template BasicTensor<Real> add(const BasicTensor<Real>&, const BasicTensor<Real>&);         \
  template BasicTensor<Real> add_rowwise(const BasicTensor<Real>&, const BasicTensor<Real>&); \
  template BasicTensor<Real> mul(const BasicTensor<Real>&, const BasicTensor<Real>&);         \
  template BasicTensor<Real> scale(const BasicTensor<Real>&, Real);                           \
  template BasicTensor<Real> sum(const BasicTensor<Real>&);                                   \
  template BasicTensor<Real> gelu(const BasicTensor<Real>&);                                  \
  template BasicTensor<Real> layer_norm(const BasicTensor<Real>&, const BasicTensor<Real>&,   \
                                        const BasicTensor<Real>&, Real);                      \
  template BasicTensor<Real> softmax_rows(const BasicTensor<Real>&);                          \
  template BasicTensor<Real> gather_rows(const BasicTensor<Real>&,                            \
                                         std::span<const std::int32_t>);                      \
  template BasicTensor<Real> cross_entropy_logits(                                            \
      const BasicTensor<Real>&, std::span<const std::int32_t>, const std::vector<bool>&);     \
  template double log_prob(std::span<const Real>, std::int32_t);                              \
  template BasicTensor<Real> multi_head_attention(                                            \
      const BasicTensor<Real>&, const AttentionOptions<Real>&, std::vector<Real>*);

POSPHASE_INSTANTIATE_OPS(float)
POSPHASE_INSTANTIATE_OPS(double)

#undef POSPHASE_INSTANTIATE_OPS

}  // namespace posphase::numerics
