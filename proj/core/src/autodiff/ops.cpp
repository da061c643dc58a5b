// SPDX-License-Identifier: Apache-2.0
#include "sstg/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <cblas.h>

#include "sstg/errors.hpp"

namespace sstg::ad {

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

// Reductions with eight independent partial sums so they vectorize without
// reassociation flags; the order is fixed, so results are reproducible.
double sum_of(const double* x, std::size_t n) {
  double a[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) a[j] += x[i + j];
  }
  for (; i < n; ++i) a[0] += x[i];
  return ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
}

double dot_of(const double* x, const double* y, std::size_t n) {
  double a[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) a[j] += x[i + j] * y[i + j];
  }
  for (; i < n; ++i) a[0] += x[i] * y[i];
  return ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
}

// Σ (x - m)²
double centered_sq(const double* x, double m, std::size_t n) {
  double a[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) a[j] += (x[i + j] - m) * (x[i + j] - m);
  }
  for (; i < n; ++i) a[0] += (x[i] - m) * (x[i] - m);
  return ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void require_rank(const Tensor& t, std::initializer_list<std::size_t> ranks, const char* op,
                  const char* what) {
  for (auto r : ranks) {
    if (t.rank() == r) return;
  }
  throw ShapeError(std::string(op) + ": unexpected rank for " + what + " " + shape_str(t.shape()));
}

bool wants_grad(const ImplPtr& p) { return accumulates(p.get()); }

// Interprets x as [batch, channels, length] where a rank-2 tensor has batch 1.
struct Ncl {
  std::size_t n, c, l;
};

Ncl as_ncl(const Tensor& x, const char* op) {
  require_rank(x, {2, 3}, op, "input");
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
  return {x.dim(0), x.dim(1), x.dim(2)};
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  ImplPtr ai = a.impl(), bi = b.impl();
  return tape.emit(
      a.shape(), std::move(out), tape.wants({&a, &b}),
      [ai, bi](TensorImpl& o) {
        for (const auto& p : {ai, bi}) {
          if (!wants_grad(p)) continue;
          auto& g = p->grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        }
      },
      "add");
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  ImplPtr ai = a.impl(), bi = b.impl();
  return tape.emit(
      a.shape(), std::move(out), tape.wants({&a, &b}),
      [ai, bi](TensorImpl& o) {
        if (wants_grad(ai)) {
          auto& g = ai->grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        }
        if (wants_grad(bi)) {
          auto& g = bi->grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
        }
      },
      "sub");
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  ImplPtr ai = a.impl(), bi = b.impl();
  return tape.emit(
      a.shape(), std::move(out), tape.wants({&a, &b}),
      [ai, bi](TensorImpl& o) {
        // Compute both contributions before writing: a and b may alias.
        const std::size_t n = o.grad.size();
        std::vector<double> ga, gb;
        if (wants_grad(ai)) {
          ga.resize(n);
          for (std::size_t i = 0; i < n; ++i) ga[i] = o.grad[i] * bi->values[i];
        }
        if (wants_grad(bi)) {
          gb.resize(n);
          for (std::size_t i = 0; i < n; ++i) gb[i] = o.grad[i] * ai->values[i];
        }
        if (!ga.empty()) {
          auto& g = ai->grad_buffer();
          for (std::size_t i = 0; i < n; ++i) g[i] += ga[i];
        }
        if (!gb.empty()) {
          auto& g = bi->grad_buffer();
          for (std::size_t i = 0; i < n; ++i) g[i] += gb[i];
        }
      },
      "mul");
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  ImplPtr ai = a.impl();
  return tape.emit(
      a.shape(), std::move(out), tape.wants({&a}),
      [ai, factor](TensorImpl& o) {
        auto& g = ai->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * o.grad[i];
      },
      "scale");
}

Tensor sum(Tape& tape, const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  ImplPtr ai = a.impl();
  return tape.emit(
      {1}, {s}, tape.wants({&a}),
      [ai](TensorImpl& o) {
        auto& g = ai->grad_buffer();
        for (auto& x : g) x += o.grad[0];
      },
      "sum");
}

Tensor mean(Tape& tape, const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  const double inv = 1.0 / static_cast<double>(a.numel());
  ImplPtr ai = a.impl();
  return tape.emit(
      {1}, {s * inv}, tape.wants({&a}),
      [ai, inv](TensorImpl& o) {
        auto& g = ai->grad_buffer();
        for (auto& x : g) x += o.grad[0] * inv;
      },
      "mean");
}

Tensor element(Tape& tape, const Tensor& a, std::size_t flat_index) {
  if (flat_index >= a.numel()) {
    throw ShapeError("element: index " + std::to_string(flat_index) + " out of range for " +
                     shape_str(a.shape()));
  }
  ImplPtr ai = a.impl();
  return tape.emit(
      {1}, {a.values()[flat_index]}, tape.wants({&a}),
      [ai, flat_index](TensorImpl& o) { ai->grad_buffer()[flat_index] += o.grad[0]; }, "element");
}

Tensor reshape(Tape& tape, const Tensor& a, const Shape& shape) {
  if (numel_of(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  ImplPtr ai = a.impl();
  std::vector<double> out(a.values().begin(), a.values().end());
  return tape.emit(
      shape, std::move(out), tape.wants({&a}),
      [ai](TensorImpl& o) {
        auto& g = ai->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      },
      "reshape");
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  std::vector<std::size_t> widths;  // axis extent × inner, per part
  std::size_t axis_total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) ok = false;
    }
    if (!ok) throw ShapeError("concat: incompatible " + shape_str(s) + " vs " + shape_str(first));
    axis_total += s[axis];
    widths.push_back(s[axis] * inner);
  }
  const std::size_t row = axis_total * inner;
  std::vector<double> out(outer * row);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * widths[k], widths[k], out.begin() + o * row + offset);
    }
    offset += widths[k];
  }
  Shape shape = first;
  shape[axis] = axis_total;

  std::vector<ImplPtr> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  return tape.emit(
      std::move(shape), std::move(out), tape.wants(parts),
      [impls, widths, outer, row](TensorImpl& o) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < impls.size(); ++k) {
          if (wants_grad(impls[k])) {
            auto& g = impls[k]->grad_buffer();
            for (std::size_t r = 0; r < outer; ++r) {
              const double* src = o.grad.data() + r * row + off;
              double* dst = g.data() + r * widths[k];
              for (std::size_t i = 0; i < widths[k]; ++i) dst[i] += src[i];
            }
          }
          off += widths[k];
        }
      },
      "concat");
}

Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index) {
  if (x.rank() < 1 || index.empty()) throw ShapeError("gather_rows: empty input");
  const std::size_t n = x.dim(0);
  const std::size_t width = x.numel() / n;
  std::vector<double> out(index.size() * width);
  const auto xv = x.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(xv.begin() + index[i] * width, width, out.begin() + i * width);
  }
  Shape shape = x.shape();
  shape[0] = index.size();
  ImplPtr xi = x.impl();
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape.emit(
      std::move(shape), std::move(out), tape.wants({&x}),
      [xi, idx = std::move(idx), width](TensorImpl& o) {
        auto& g = xi->grad_buffer();
        for (std::size_t i = 0; i < idx.size(); ++i) {
          const double* src = o.grad.data() + i * width;
          double* dst = g.data() + idx[i] * width;
          for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
      },
      "gather_rows");
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank(a, {2}, "matmul", "lhs");
  require_rank(b, {2}, "matmul", "rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ " + shape_str(a.shape()) + " · " +
                     shape_str(b.shape()));
  }
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  ImplPtr ai = a.impl(), bi = b.impl();
  return tape.emit(
      {m, n}, std::move(out), tape.wants({&a, &b}),
      [ai, bi, m, k, n](TensorImpl& o) {
        const double* dc = o.grad.data();
        std::vector<double> da, db;
        if (wants_grad(ai)) {
          // dA = dC · Bᵀ
          da.assign(m * k, 0.0);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += dc[i * n + j] * bi->values[p * n + j];
              da[i * k + p] = s;
            }
          }
        }
        if (wants_grad(bi)) {
          // dB = Aᵀ · dC
          db.assign(k * n, 0.0);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = ai->values[i * k + p];
              for (std::size_t j = 0; j < n; ++j) db[p * n + j] += aip * dc[i * n + j];
            }
          }
        }
        if (!da.empty()) {
          auto& g = ai->grad_buffer();
          for (std::size_t i = 0; i < da.size(); ++i) g[i] += da[i];
        }
        if (!db.empty()) {
          auto& g = bi->grad_buffer();
          for (std::size_t i = 0; i < db.size(); ++i) g[i] += db[i];
        }
      },
      "matmul");
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, {1, 2}, "linear", "input");
  require_rank(weight, {2}, "linear", "weight");
  const std::size_t in = weight.dim(1), out_dim = weight.dim(0);
  const std::size_t batch = x.rank() == 1 ? 1 : x.dim(0);
  const std::size_t x_in = x.rank() == 1 ? x.dim(0) : x.dim(1);
  if (x_in != in) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " +
                     shape_str(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_dim)) {
    throw ShapeError("linear: bias " + shape_str(bias.shape()) + " vs weight " +
                     shape_str(weight.shape()));
  }
  const auto xv = x.values(), wv = weight.values();
  std::vector<double> out(batch * out_dim);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = xv.data() + r * in;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* wr = wv.data() + o * in;
      double s = bias.defined() ? bias.values()[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) s += xr[i] * wr[i];
      out[r * out_dim + o] = s;
    }
  }
  Shape shape = x.rank() == 1 ? Shape{out_dim} : Shape{batch, out_dim};
  ImplPtr xi = x.impl(), wi = weight.impl(), bi = bias.defined() ? bias.impl() : nullptr;
  return tape.emit(
      std::move(shape), std::move(out), tape.wants({&x, &weight, &bias}),
      [xi, wi, bi, batch, in, out_dim](TensorImpl& o) {
        const double* dy = o.grad.data();
        std::vector<double> dx;
        if (wants_grad(xi)) {
          dx.assign(batch * in, 0.0);
          for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t k = 0; k < out_dim; ++k) {
              const double g = dy[r * out_dim + k];
              const double* wr = wi->values.data() + k * in;
              double* dxr = dx.data() + r * in;
              for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
            }
          }
        }
        if (wants_grad(wi)) {
          auto& gw = wi->grad_buffer();
          for (std::size_t r = 0; r < batch; ++r) {
            const double* xr = xi->values.data() + r * in;
            for (std::size_t k = 0; k < out_dim; ++k) {
              const double g = dy[r * out_dim + k];
              double* gwr = gw.data() + k * in;
              for (std::size_t i = 0; i < in; ++i) gwr[i] += g * xr[i];
            }
          }
        }
        if (wants_grad(bi)) {
          auto& gb = bi->grad_buffer();
          for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t k = 0; k < out_dim; ++k) gb[k] += dy[r * out_dim + k];
          }
        }
        if (!dx.empty()) {
          auto& g = xi->grad_buffer();
          for (std::size_t i = 0; i < dx.size(); ++i) g[i] += dx[i];
        }
      },
      "linear");
}

namespace {

// Output positions t whose receptive index t·stride + k − padding falls in [0, len).
struct TapRange {
  std::size_t lo, hi;  // half-open
};

TapRange tap_range(std::size_t k, std::size_t len, std::size_t l_out, std::size_t stride,
                   std::size_t padding) {
  const long kk = static_cast<long>(k), p = static_cast<long>(padding), s = static_cast<long>(stride);
  long lo = 0;
  if (p > kk) lo = (p - kk + s - 1) / s;
  const long last = static_cast<long>(len) - 1 + p - kk;
  if (last < 0) return {0, 0};
  long hi = std::min(static_cast<long>(l_out), last / s + 1);
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Row-major C = op(A) op(B) + beta C with op(A) [m, k] and op(B) [k, n].
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double beta, double* c) {
  const auto mi = static_cast<int>(m), ni = static_cast<int>(n), ki = static_cast<int>(k);
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, mi, ni,
              ki, 1.0, a, trans_a ? mi : ki, b, trans_b ? ki : ni, beta, c, ni);
}

// col[c*K + k][t] = x[c][t*stride + k - padding], zero outside the signal;
// rows are `ld` apart.
void im2col(const double* x, std::size_t channels, std::size_t len, std::size_t kernel, std::size_t stride,
            std::size_t padding, std::size_t l_out, std::size_t ld, const std::vector<TapRange>& taps, double* col) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xr = x + c * len;
    for (std::size_t k = 0; k < kernel; ++k) {
      double* row = col + (c * kernel + k) * ld;
      const auto [lo, hi] = taps[k];
      std::fill(row, row + lo, 0.0);
      if (stride == 1) {
        std::copy(xr + (lo + k - padding), xr + (hi + k - padding), row + lo);
      } else {
        for (std::size_t t = lo; t < hi; ++t) row[t] = xr[t * stride + k - padding];
      }
      std::fill(row + std::max(lo, hi), row + l_out, 0.0);
    }
  }
}

// Adjoint of im2col: scatter-adds col back onto gx.
void col2im(const double* col, std::size_t channels, std::size_t len, std::size_t kernel, std::size_t stride,
            std::size_t padding, std::size_t ld, const std::vector<TapRange>& taps, double* gx) {
  for (std::size_t c = 0; c < channels; ++c) {
    double* gr = gx + c * len;
    for (std::size_t k = 0; k < kernel; ++k) {
      const double* row = col + (c * kernel + k) * ld;
      const auto [lo, hi] = taps[k];
      if (stride == 1) {
        double* g = gr + (lo + k - padding);
        for (std::size_t t = lo; t < hi; ++t) g[t - lo] += row[t];
      } else {
        for (std::size_t t = lo; t < hi; ++t) gr[t * stride + k - padding] += row[t];
      }
    }
  }
}

}  // namespace

Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
              std::size_t padding) {
  const Ncl d = as_ncl(x, "conv1d");
  require_rank(w, {3}, "conv1d", "weight");
  const std::size_t c_out = w.dim(0), c_in = w.dim(1), kernel = w.dim(2);
  if (c_in != d.c) {
    throw ShapeError("conv1d: input channels " + std::to_string(d.c) + " vs weight " +
                     shape_str(w.shape()));
  }
  if (b.defined() && (b.rank() != 1 || b.dim(0) != c_out)) {
    throw ShapeError("conv1d: bias " + shape_str(b.shape()));
  }
  if (stride == 0) throw ShapeError("conv1d: stride must be positive");
  if (d.l + 2 * padding < kernel) {
    throw ShapeError("conv1d: kernel " + std::to_string(kernel) + " larger than padded input " +
                     std::to_string(d.l + 2 * padding));
  }
  const std::size_t l_out = (d.l + 2 * padding - kernel) / stride + 1;
  const std::size_t len = d.l;

  std::vector<TapRange> taps(kernel);
  for (std::size_t k = 0; k < kernel; ++k) taps[k] = tap_range(k, len, l_out, stride, padding);

  // Unfold every sample into one [C_in*K, N*L_out] matrix so the whole batch
  // is a single product with the weight matrix [C_out, C_in*K].
  const std::size_t rows = d.c * kernel, cols = d.n * l_out;
  const auto xv = x.values(), wv = w.values();
  std::vector<double> col(rows * cols);
  for (std::size_t n = 0; n < d.n; ++n) {
    im2col(xv.data() + n * d.c * len, d.c, len, kernel, stride, padding, l_out, cols, taps, col.data() + n * l_out);
  }
  std::vector<double> prod(c_out * cols);
  gemm(false, false, c_out, cols, rows, wv.data(), col.data(), 0.0, prod.data());
  std::vector<double> out(d.n * c_out * l_out);
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t o = 0; o < c_out; ++o) {
      const double bias = b.defined() ? b.values()[o] : 0.0;
      const double* src = prod.data() + o * cols + n * l_out;
      double* dst = out.data() + (n * c_out + o) * l_out;
      for (std::size_t t = 0; t < l_out; ++t) dst[t] = src[t] + bias;
    }
  }
  Shape shape = x.rank() == 2 ? Shape{c_out, l_out} : Shape{d.n, c_out, l_out};
  ImplPtr xi = x.impl(), wi = w.impl(), bi = b.defined() ? b.impl() : nullptr;
  return tape.emit(
      std::move(shape), std::move(out), tape.wants({&x, &w, &b}),
      [xi, wi, bi, d, c_out, kernel, l_out, stride, padding, taps](TensorImpl& o) {
        const double* dy_all = o.grad.data();
        const std::size_t c_in = d.c, len = d.l, rows = c_in * kernel, cols = d.n * l_out;
        const bool need_x = wants_grad(xi), need_w = wants_grad(wi);
        if (wants_grad(bi)) {
          auto& gb = bi->grad_buffer();
          for (std::size_t n = 0; n < d.n; ++n) {
            for (std::size_t oc = 0; oc < c_out; ++oc) {
              gb[oc] += sum_of(dy_all + (n * c_out + oc) * l_out, l_out);
            }
          }
        }
        if (!need_x && !need_w) return;
        // dY as [C_out, N*L_out], matching the unfolded layout.
        std::vector<double> dy(c_out * cols);
        for (std::size_t n = 0; n < d.n; ++n) {
          for (std::size_t oc = 0; oc < c_out; ++oc) {
            std::copy_n(dy_all + (n * c_out + oc) * l_out, l_out, dy.data() + oc * cols + n * l_out);
          }
        }
        std::vector<double> col(rows * cols);
        if (need_w) {
          for (std::size_t n = 0; n < d.n; ++n) {
            im2col(xi->values.data() + n * c_in * len, c_in, len, kernel, stride, padding, l_out, cols, taps,
                   col.data() + n * l_out);
          }
          gemm(false, true, c_out, rows, cols, dy.data(), col.data(), 1.0, wi->grad_buffer().data());
        }
        if (need_x) {
          gemm(true, false, rows, cols, c_out, wi->values.data(), dy.data(), 0.0, col.data());
          double* gx = xi->grad_buffer().data();
          for (std::size_t n = 0; n < d.n; ++n) {
            col2im(col.data() + n * l_out, c_in, len, kernel, stride, padding, cols, taps, gx + n * c_in * len);
          }
        }
      },
      "conv1d");
}

BatchNormState BatchNormState::fresh(std::size_t channels) {
  BatchNormState s;
  s.running_mean = Tensor::zeros({channels});
  s.running_var = Tensor::constant({channels}, 1.0);
  return s;
}

Tensor batchnorm1d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, NormMode mode) {
  const Ncl d = as_ncl(x, "batchnorm1d");
  if (gamma.numel() != d.c || beta.numel() != d.c) {
    throw ShapeError("batchnorm1d: gamma/beta must have " + std::to_string(d.c) + " entries");
  }
  if (!state.running_mean.defined()) {
    state.running_mean = Tensor::zeros({d.c});
    state.running_var = Tensor::constant({d.c}, 1.0);
  }
  if (state.running_mean.numel() != d.c || state.running_var.numel() != d.c) {
    throw ShapeError("batchnorm1d: running state size mismatch");
  }
  const std::size_t count = d.n * d.l;
  const double eps = state.epsilon;
  std::vector<double> mu(d.c), inv_std(d.c);
  const auto xv = x.values();

  if (mode == NormMode::train) {
    if (count < 2) throw ShapeError("batchnorm1d: train mode needs N·L >= 2");
    auto rm = state.running_mean.mutable_values();
    auto rv = state.running_var.mutable_values();
    for (std::size_t c = 0; c < d.c; ++c) {
      double s = 0.0;
      for (std::size_t n = 0; n < d.n; ++n) s += sum_of(xv.data() + (n * d.c + c) * d.l, d.l);
      const double m = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t n = 0; n < d.n; ++n) ss += centered_sq(xv.data() + (n * d.c + c) * d.l, m, d.l);
      const double var = ss / static_cast<double>(count);
      mu[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + eps);
      const double unbiased = ss / static_cast<double>(count - 1);
      rm[c] = (1.0 - state.momentum) * rm[c] + state.momentum * m;
      rv[c] = (1.0 - state.momentum) * rv[c] + state.momentum * unbiased;
    }
    state.initialized = true;
  } else {
    if (!state.initialized) {
      throw UninitializedState("batchnorm1d: eval mode requires running statistics");
    }
    const auto rm = state.running_mean.values();
    const auto rv = state.running_var.values();
    for (std::size_t c = 0; c < d.c; ++c) {
      mu[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + eps);
    }
  }

  const auto gv = gamma.values(), bv = beta.values();
  std::vector<double> out(xv.size());
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t c = 0; c < d.c; ++c) {
      const double* r = xv.data() + (n * d.c + c) * d.l;
      double* y = out.data() + (n * d.c + c) * d.l;
      const double a = gv[c] * inv_std[c], sh = bv[c] - mu[c] * a;
      for (std::size_t t = 0; t < d.l; ++t) y[t] = r[t] * a + sh;
    }
  }

  ImplPtr xi = x.impl(), gi = gamma.impl(), bi = beta.impl();
  const bool batch_stats = mode == NormMode::train;
  return tape.emit(
      x.shape(), std::move(out), tape.wants({&x, &gamma, &beta}),
      [xi, gi, bi, d, mu = std::move(mu), inv_std = std::move(inv_std), batch_stats,
       count](TensorImpl& o) {
        const double* dy_all = o.grad.data();
        const double* xv = xi->values.data();
        std::vector<double> sum_dy(d.c, 0.0), sum_dy_xhat(d.c, 0.0);
        for (std::size_t n = 0; n < d.n; ++n) {
          for (std::size_t c = 0; c < d.c; ++c) {
            const double* r = xv + (n * d.c + c) * d.l;
            const double* dy = dy_all + (n * d.c + c) * d.l;
            const double s = sum_of(dy, d.l);
            // Σ dy·(x − μ) = Σ dy·x − μ·Σ dy
            const double sx = dot_of(dy, r, d.l) - mu[c] * s;
            sum_dy[c] += s;
            sum_dy_xhat[c] += sx * inv_std[c];
          }
        }
        if (wants_grad(gi)) {
          auto& g = gi->grad_buffer();
          for (std::size_t c = 0; c < d.c; ++c) g[c] += sum_dy_xhat[c];
        }
        if (wants_grad(bi)) {
          auto& g = bi->grad_buffer();
          for (std::size_t c = 0; c < d.c; ++c) g[c] += sum_dy[c];
        }
        if (!wants_grad(xi)) return;
        auto& gx = xi->grad_buffer();
        const double inv_m = 1.0 / static_cast<double>(count);
        for (std::size_t n = 0; n < d.n; ++n) {
          for (std::size_t c = 0; c < d.c; ++c) {
            const double* r = xv + (n * d.c + c) * d.l;
            const double* dy = dy_all + (n * d.c + c) * d.l;
            double* g = gx.data() + (n * d.c + c) * d.l;
            const double gamma_c = gi->values[c];
            const double k = gamma_c * inv_std[c];
            if (batch_stats) {
              // dx = γ·σ⁻¹·(dy − mean(dy) − x̂·mean(dy·x̂))
              const double mdy = sum_dy[c] * inv_m, mdx = sum_dy_xhat[c] * inv_m;
              const double m = mu[c], is = inv_std[c];
              for (std::size_t t = 0; t < d.l; ++t) {
                const double xhat = (r[t] - m) * is;
                g[t] += k * (dy[t] - mdy - xhat * mdx);
              }
            } else {
              for (std::size_t t = 0; t < d.l; ++t) g[t] += k * dy[t];
            }
          }
        }
      },
      "batchnorm1d");
}

Tensor relu(Tape& tape, const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  ImplPtr xi = x.impl();
  return tape.emit(
      x.shape(), std::move(out), tape.wants({&x}),
      [xi](TensorImpl& o) {
        double* g = xi->grad_buffer().data();
        const double* x = xi->values.data();
        const double* dy = o.grad.data();
        const std::size_t n = o.grad.size();
        for (std::size_t i = 0; i < n; ++i) g[i] += x[i] > 0.0 ? dy[i] : 0.0;
      },
      "relu");
}

namespace {
double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(Tape& tape, const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  ImplPtr xi = x.impl();
  return tape.emit(
      x.shape(), std::move(out), tape.wants({&x}),
      [xi](TensorImpl& o) {
        auto& g = xi->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = o.values[i];
          g[i] += o.grad[i] * s * (1.0 - s);
        }
      },
      "sigmoid");
}

Tensor tanh(Tape& tape, const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  ImplPtr xi = x.impl();
  return tape.emit(
      x.shape(), std::move(out), tape.wants({&x}),
      [xi](TensorImpl& o) {
        auto& g = xi->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double t = o.values[i];
          g[i] += o.grad[i] * (1.0 - t * t);
        }
      },
      "tanh");
}

Tensor log_softmax(Tape& tape, const Tensor& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw ShapeError("log_softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t n = s[axis];
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      double mx = xv[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) z += std::exp(xv[base + j * inner] - mx);
      const double lse = mx + std::log(z);
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] = xv[base + j * inner] - lse;
    }
  }
  ImplPtr xi = x.impl();
  return tape.emit(
      s, std::move(out), tape.wants({&x}),
      [xi, outer, inner, n](TensorImpl& o) {
        auto& g = xi->grad_buffer();
        for (std::size_t a = 0; a < outer; ++a) {
          for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = a * n * inner + i;
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) total += o.grad[base + j * inner];
            for (std::size_t j = 0; j < n; ++j) {
              const std::size_t idx = base + j * inner;
              g[idx] += o.grad[idx] - std::exp(o.values[idx]) * total;
            }
          }
        }
      },
      "log_softmax");
}

Tensor activation(Tape& tape, const Tensor& x, Activation kind, std::size_t axis) {
  switch (kind) {
    case Activation::relu:
      return relu(tape, x);
    case Activation::sigmoid:
      return sigmoid(tape, x);
    case Activation::tanh:
      return tanh(tape, x);
    case Activation::log_softmax:
      return log_softmax(tape, x, axis);
  }
  throw ContractViolation("activation: unknown kind");
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_rank(x, {2, 3}, "global_avg_pool", "input");
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  const auto xv = x.values();
  std::vector<double> out(rows);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) s += xv[r * len + t];
    out[r] = s * inv;
  }
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  ImplPtr xi = x.impl();
  return tape.emit(
      std::move(shape), std::move(out), tape.wants({&x}),
      [xi, rows, len, inv](TensorImpl& o) {
        auto& g = xi->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
          const double v = o.grad[r] * inv;
          for (std::size_t t = 0; t < len; ++t) g[r * len + t] += v;
        }
      },
      "global_avg_pool");
}

Tensor max_pool1d(Tape& tape, const Tensor& x, std::size_t kernel, std::size_t stride) {
  require_rank(x, {2, 3}, "max_pool1d", "input");
  if (kernel == 0 || stride == 0) throw ShapeError("max_pool1d: kernel and stride must be positive");
  const std::size_t len = x.shape().back();
  if (len < kernel) {
    throw ShapeError("max_pool1d: length " + std::to_string(len) + " shorter than kernel " +
                     std::to_string(kernel));
  }
  const std::size_t rows = x.numel() / len;
  const std::size_t l_out = (len - kernel) / stride + 1;
  const auto xv = x.values();
  std::vector<double> out(rows * l_out);
  auto winner = std::make_shared<std::vector<std::size_t>>(rows * l_out);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * len;
    for (std::size_t t = 0; t < l_out; ++t) {
      std::size_t best = t * stride;
      for (std::size_t k = 1; k < kernel; ++k) {
        if (xr[t * stride + k] > xr[best]) best = t * stride + k;
      }
      out[r * l_out + t] = xr[best];
      (*winner)[r * l_out + t] = r * len + best;
    }
  }
  Shape shape = x.shape();
  shape.back() = l_out;
  ImplPtr xi = x.impl();
  return tape.emit(
      std::move(shape), std::move(out), tape.wants({&x}),
      [xi, winner](TensorImpl& o) {
        auto& g = xi->grad_buffer();
        for (std::size_t i = 0; i < winner->size(); ++i) g[(*winner)[i]] += o.grad[i];
      },
      "max_pool1d");
}

Tensor channel_scale(Tape& tape, const Tensor& x, const Tensor& s) {
  require_rank(x, {2, 3}, "channel_scale", "input");
  const Shape expect(x.shape().begin(), x.shape().end() - 1);
  if (s.shape() != expect) {
    throw ShapeError("channel_scale: scale " + shape_str(s.shape()) + " vs input " +
                     shape_str(x.shape()));
  }
  const std::size_t len = x.shape().back();
  const std::size_t rows = s.numel();
  const auto xv = x.values(), sv = s.values();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < len; ++t) out[r * len + t] = sv[r] * xv[r * len + t];
  }
  ImplPtr xi = x.impl(), si = s.impl();
  return tape.emit(
      x.shape(), std::move(out), tape.wants({&x, &s}),
      [xi, si, rows, len](TensorImpl& o) {
        if (wants_grad(si)) {
          auto& g = si->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (std::size_t t = 0; t < len; ++t) acc += o.grad[r * len + t] * xi->values[r * len + t];
            g[r] += acc;
          }
        }
        if (wants_grad(xi)) {
          auto& g = xi->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            const double sr = si->values[r];
            for (std::size_t t = 0; t < len; ++t) g[r * len + t] += sr * o.grad[r * len + t];
          }
        }
      },
      "channel_scale");
}

Tensor nll_loss(Tape& tape, const Tensor& log_probs, std::span<const std::size_t> targets) {
  require_rank(log_probs, {1, 2}, "nll_loss", "log_probs");
  const std::size_t batch = log_probs.rank() == 1 ? 1 : log_probs.dim(0);
  const std::size_t classes = log_probs.shape().back();
  if (targets.size() != batch) {
    throw ShapeError("nll_loss: " + std::to_string(targets.size()) + " targets for batch " +
                     std::to_string(batch));
  }
  const auto lv = log_probs.values();
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b] >= classes) {
      throw InvalidLabel("nll_loss: target " + std::to_string(targets[b]) + " outside 0.." +
                         std::to_string(classes - 1));
    }
    total -= lv[b * classes + targets[b]];
  }
  const double inv = 1.0 / static_cast<double>(batch);
  ImplPtr li = log_probs.impl();
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  return tape.emit(
      {1}, {total * inv}, tape.wants({&log_probs}),
      [li, tg = std::move(tg), classes, inv](TensorImpl& o) {
        auto& g = li->grad_buffer();
        for (std::size_t b = 0; b < tg.size(); ++b) g[b * classes + tg[b]] -= o.grad[0] * inv;
      },
      "nll_loss");
}

}  // namespace sstg::ad
