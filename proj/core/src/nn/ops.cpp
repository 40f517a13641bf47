#include "adexsbi/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adexsbi::nn {
namespace {

[[noreturn]] void fail(const Graph& g, const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + " (node " + std::to_string(g.next_id()) + "): " + what);
}

Graph& graph_of(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid()) throw ShapeError(std::string(op) + ": invalid variable");
  if (a.graph() != b.graph()) throw ShapeError(std::string(op) + ": operands belong to different graphs");
  return *a.graph();
}

enum class Broadcast { kSame, kRow, kScalar };

Broadcast broadcast_kind(const Graph& g, const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (a.rank() == 2) {
    const std::size_t m = a.dim(1);
    if ((b.rank() == 1 && b.dim(0) == m) || (b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == m)) {
      return Broadcast::kRow;
    }
  }
  if (b.size() == 1) return Broadcast::kScalar;
  fail(g, op, "cannot broadcast " + shape_string(b.shape()) + " onto " + shape_string(a.shape()));
}

// Index into b for element i of a.
inline std::size_t bidx(Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kRow:
      return i % cols;
    case Broadcast::kScalar:
      return 0;
  }
  return 0;
}

template <typename Fwd, typename Deriv>
Var unary(Var a, const char* op, Fwd f, Deriv df) {
  Graph& g = *a.graph();
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return g.record(op, std::move(y), {ia}, [ia, df](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    const Tensor& xv = gr.value(ia);
    const Tensor& yv = gr.value(self);
    Tensor& gx = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0 || length < kernel) return 0;
  return (length - kernel) / stride + 1;
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    fail(g, "matmul", "incompatible shapes " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  const std::size_t n = A.dim(0), k = A.dim(1), m = B.dim(1);
  Tensor C(Shape{n, m});
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = pc + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("matmul", std::move(C), {ia, ib}, [ia, ib, n, k, m](Graph& gr, std::size_t self) {
    const double* gc = gr.grad_of(self).data().data();
    if (gr.requires_grad(ia)) {
      const double* pbv = gr.value(ib).data().data();
      double* ga = gr.grad_buffer(ia).data().data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = gc + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = pbv + p * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (gr.requires_grad(ib)) {
      const double* pav = gr.value(ia).data().data();
      double* gb = gr.grad_buffer(ib).data().data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = gc + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pav[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = gb + p * m;
          for (std::size_t j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b, "add");
  const Broadcast kind = broadcast_kind(g, "add", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t cols = av.rank() == 2 ? av.dim(1) : 1;
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] + bv[bidx(kind, i, cols)];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("add", std::move(y), {ia, ib}, [ia, ib, kind, cols](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    if (gr.requires_grad(ia)) {
      Tensor& ga = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gb = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[bidx(kind, i, cols)] += gy[i];
    }
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b, "sub");
  const Broadcast kind = broadcast_kind(g, "sub", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t cols = av.rank() == 2 ? av.dim(1) : 1;
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] - bv[bidx(kind, i, cols)];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("sub", std::move(y), {ia, ib}, [ia, ib, kind, cols](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    if (gr.requires_grad(ia)) {
      Tensor& ga = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gb = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[bidx(kind, i, cols)] -= gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b, "mul");
  const Broadcast kind = broadcast_kind(g, "mul", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t cols = av.rank() == 2 ? av.dim(1) : 1;
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] * bv[bidx(kind, i, cols)];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("mul", std::move(y), {ia, ib}, [ia, ib, kind, cols](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    const Tensor& x = gr.value(ia);
    const Tensor& z = gr.value(ib);
    if (gr.requires_grad(ia)) {
      Tensor& ga = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * z[bidx(kind, i, cols)];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gb = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[bidx(kind, i, cols)] += gy[i] * x[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double shift) {
  return unary(
      a, "add_scalar", [shift](double x) { return x + shift; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  // Subgradient 0 at the kink.
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary(
      a, "softplus", [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

Var square(Var a) {
  return unary(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(Var a) {
  Graph& g = *a.graph();
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return g.record("sum", Tensor::scalar(s), {ia}, [ia](Graph& gr, std::size_t self) {
    const double gy = gr.grad_of(self)[0];
    Tensor& ga = gr.grad_buffer(ia);
    for (double& v : ga.data()) v += gy;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) fail(*a.graph(), "mean", "empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
  Graph& g = *a.graph();
  const Tensor& x = a.value();
  if (x.rank() != 2) fail(g, "row_sum", "expected rank 2, got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), m = x.dim(1);
  Tensor y(Shape{n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += x.at(i, j);
    y[i] = s;
  }
  const std::size_t ia = a.id();
  return g.record("row_sum", std::move(y), {ia}, [ia, n, m](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += gy[i];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Graph& g = *a.graph();
  const Tensor& x = a.value();
  if (x.rank() != 2 || begin > end || end > x.dim(1)) {
    fail(g, "slice_cols",
         "range [" + std::to_string(begin) + "," + std::to_string(end) + ") on " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), m = x.dim(1), w = end - begin;
  Tensor y(Shape{n, w});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) y[i * w + j] = x[i * m + begin + j];
  const std::size_t ia = a.id();
  return g.record("slice_cols", std::move(y), {ia}, [ia, n, m, w, begin](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * m + begin + j] += gy[i * w + j];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Graph& g = *parts.front().graph();
  const std::size_t n = parts.front().value().rank() == 2 ? parts.front().value().dim(0) : 0;
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.graph() != &g) fail(g, "concat_cols", "inputs belong to different graphs");
    const Tensor& v = p.value();
    if (v.rank() != 2 || v.dim(0) != n) {
      fail(g, "concat_cols", "input " + std::to_string(p.id()) + " has shape " + shape_string(v.shape()));
    }
    widths.push_back(v.dim(1));
    ids.push_back(p.id());
    total += v.dim(1);
  }
  Tensor y(Shape{n, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) y[i * total + off + j] = v[i * widths[k] + j];
    off += widths[k];
  }
  return g.record("concat_cols", std::move(y), ids, [ids, widths, n, total](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.requires_grad(ids[k])) {
        Tensor& ga = gr.grad_buffer(ids[k]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) ga[i * widths[k] + j] += gy[i * total + o + j];
      }
      o += widths[k];
    }
  });
}

Var gather_cols(Var a, std::span<const std::size_t> indices) {
  Graph& g = *a.graph();
  const Tensor& x = a.value();
  if (x.rank() != 2) fail(g, "gather_cols", "expected rank 2, got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), m = x.dim(1), w = indices.size();
  for (std::size_t idx : indices) {
    if (idx >= m) fail(g, "gather_cols", "column " + std::to_string(idx) + " out of range for " + shape_string(x.shape()));
  }
  std::vector<std::size_t> cols(indices.begin(), indices.end());
  Tensor y(Shape{n, w});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) y[i * w + j] = x[i * m + cols[j]];
  const std::size_t ia = a.id();
  return g.record("gather_cols", std::move(y), {ia}, [ia, cols, n, m, w](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * m + cols[j]] += gy[i * w + j];
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = *a.graph();
  if (shape_size(shape) != a.value().size()) {
    fail(g, "reshape", shape_string(a.value().shape()) + " to " + shape_string(shape));
  }
  const std::size_t ia = a.id();
  return g.record("reshape", a.value().reshaped(std::move(shape)), {ia}, [ia](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
  });
}

Var conv1d(Var x, Var weight, Var bias, std::size_t stride) {
  Graph& g = graph_of(x, weight, "conv1d");
  graph_of(x, bias, "conv1d");
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  const Tensor& Bv = bias.value();
  if (X.rank() != 3 || W.rank() != 3 || X.dim(1) != W.dim(1) || Bv.size() != W.dim(0)) {
    fail(g, "conv1d",
         "input " + shape_string(X.shape()) + ", weight " + shape_string(W.shape()) + ", bias " +
             shape_string(Bv.shape()));
  }
  const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2);
  const std::size_t F = W.dim(0), K = W.dim(2);
  const std::size_t out_len = conv1d_output_length(L, K, stride);
  if (out_len == 0) fail(g, "conv1d", "input length " + std::to_string(L) + " shorter than kernel");
  Tensor Y(Shape{B, F, out_len});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) {
      double* yrow = &Y[(b * F + f) * out_len];
      for (std::size_t t = 0; t < out_len; ++t) yrow[t] = Bv[f];
      for (std::size_t c = 0; c < C; ++c) {
        const double* xrow = &X[(b * C + c) * L];
        const double* wrow = &W[(f * C + c) * K];
        for (std::size_t t = 0; t < out_len; ++t) {
          const double* xs = xrow + t * stride;
          double acc = 0.0;
          for (std::size_t k = 0; k < K; ++k) acc += wrow[k] * xs[k];
          yrow[t] += acc;
        }
      }
    }
  }
  const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
  return g.record("conv1d", std::move(Y), {ix, iw, ib},
                  [=](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_of(self);
                    const Tensor& Xv = gr.value(ix);
                    const Tensor& Wv = gr.value(iw);
                    const bool gx_on = gr.requires_grad(ix), gw_on = gr.requires_grad(iw);
                    Tensor* gx = gx_on ? &gr.grad_buffer(ix) : nullptr;
                    Tensor* gw = gw_on ? &gr.grad_buffer(iw) : nullptr;
                    if (gr.requires_grad(ib)) {
                      Tensor& gb = gr.grad_buffer(ib);
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t f = 0; f < F; ++f) {
                          const double* grow = &gy[(b * F + f) * out_len];
                          double s = 0.0;
                          for (std::size_t t = 0; t < out_len; ++t) s += grow[t];
                          gb[f] += s;
                        }
                    }
                    if (!gx_on && !gw_on) return;
                    for (std::size_t b = 0; b < B; ++b) {
                      for (std::size_t f = 0; f < F; ++f) {
                        const double* grow = &gy[(b * F + f) * out_len];
                        for (std::size_t c = 0; c < C; ++c) {
                          const double* xrow = &Xv[(b * C + c) * L];
                          const double* wrow = &Wv[(f * C + c) * K];
                          for (std::size_t t = 0; t < out_len; ++t) {
                            const double gt = grow[t];
                            if (gt == 0.0) continue;
                            const std::size_t base = t * stride;
                            if (gw_on) {
                              double* gwrow = &(*gw)[(f * C + c) * K];
                              for (std::size_t k = 0; k < K; ++k) gwrow[k] += gt * xrow[base + k];
                            }
                            if (gx_on) {
                              double* gxrow = &(*gx)[(b * C + c) * L];
                              for (std::size_t k = 0; k < K; ++k) gxrow[base + k] += gt * wrow[k];
                            }
                          }
                        }
                      }
                    }
                  });
}

Var dropout(Var a, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return a;
  Graph& g = *a.graph();
  if (p >= 1.0) fail(g, "dropout", "rate must be below 1, got " + std::to_string(p));
  const Tensor& x = a.value();
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = uniform01(rng) < p ? 0.0 : keep_scale;
    y[i] = x[i] * mask[i];
  }
  const std::size_t ia = a.id();
  return g.record("dropout", std::move(y), {ia}, [ia, mask = std::move(mask)](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_of(self);
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * mask[i];
  });
}

}  // namespace adexsbi::nn
