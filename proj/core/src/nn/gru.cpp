#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "adexsbi/nn/ops.hpp"

namespace adexsbi::nn {
namespace {

inline double sigm(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// out[B,M] += in[B,K] * w[K,M]
void gemm_acc(const double* in, const double* w, double* out, std::size_t B, std::size_t K, std::size_t M) {
  for (std::size_t b = 0; b < B; ++b) {
    double* orow = out + b * M;
    for (std::size_t k = 0; k < K; ++k) {
      const double v = in[b * K + k];
      if (v == 0.0) continue;
      const double* wrow = w + k * M;
      for (std::size_t m = 0; m < M; ++m) orow[m] += v * wrow[m];
    }
  }
}

// Per-step activations kept for backprop through time.
struct GruCache {
  std::size_t B = 0, C = 0, L = 0, H = 0;
  std::vector<double> h_prev;  // [L][B][H]
  std::vector<double> r, u, n, hn;
};

}  // namespace

Var gru_sequence(Var x, Var w_ih, Var w_hh, Var b_ih, Var b_hh) {
  Graph& g = *x.graph();
  for (Var v : {w_ih, w_hh, b_ih, b_hh}) {
    if (v.graph() != &g) throw ShapeError("gru_sequence: operands belong to different graphs");
  }
  const Tensor& X = x.value();
  const Tensor& Wi = w_ih.value();
  const Tensor& Wh = w_hh.value();
  const Tensor& Bi = b_ih.value();
  const Tensor& Bh = b_hh.value();
  auto bad = [&](const std::string& what) {
    throw ShapeError("gru_sequence (node " + std::to_string(g.next_id()) + "): " + what);
  };
  if (X.rank() != 3) bad("input must be [B,C,L], got " + shape_string(X.shape()));
  const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2);
  if (Wh.rank() != 2 || Wh.dim(1) != 3 * Wh.dim(0)) bad("w_hh must be [H,3H], got " + shape_string(Wh.shape()));
  const std::size_t H = Wh.dim(0), G = 3 * H;
  if (Wi.rank() != 2 || Wi.dim(0) != C || Wi.dim(1) != G) bad("w_ih must be [C,3H], got " + shape_string(Wi.shape()));
  if (Bi.size() != G || Bh.size() != G) bad("biases must have 3H entries");
  if (L == 0) bad("empty sequence");

  auto cache = std::make_shared<GruCache>();
  cache->B = B;
  cache->C = C;
  cache->L = L;
  cache->H = H;
  const std::size_t step = B * H;
  cache->h_prev.resize(L * step);
  cache->r.resize(L * step);
  cache->u.resize(L * step);
  cache->n.resize(L * step);
  cache->hn.resize(L * step);

  std::vector<double> h(step, 0.0), xt(B * C), gi(B * G), gh(B * G);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) xt[b * C + c] = X[(b * C + c) * L + t];
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < G; ++j) {
        gi[b * G + j] = Bi[j];
        gh[b * G + j] = Bh[j];
      }
    gemm_acc(xt.data(), Wi.data().data(), gi.data(), B, C, G);
    gemm_acc(h.data(), Wh.data().data(), gh.data(), B, H, G);
    double* hp = &cache->h_prev[t * step];
    double* rr = &cache->r[t * step];
    double* uu = &cache->u[t * step];
    double* nn_ = &cache->n[t * step];
    double* hn = &cache->hn[t * step];
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t k = 0; k < H; ++k) {
        const std::size_t o = b * H + k;
        const double* gib = &gi[b * G];
        const double* ghb = &gh[b * G];
        hp[o] = h[o];
        rr[o] = sigm(gib[k] + ghb[k]);
        uu[o] = sigm(gib[H + k] + ghb[H + k]);
        hn[o] = ghb[2 * H + k];
        nn_[o] = std::tanh(gib[2 * H + k] + rr[o] * hn[o]);
        h[o] = (1.0 - uu[o]) * nn_[o] + uu[o] * h[o];
      }
    }
  }
  Tensor out(Shape{B, H}, h);

  const std::size_t ix = x.id(), iwi = w_ih.id(), iwh = w_hh.id(), ibi = b_ih.id(), ibh = b_hh.id();
  return g.record("gru_sequence", std::move(out), {ix, iwi, iwh, ibi, ibh},
                  [=](Graph& gr, std::size_t self) {
                    const GruCache& cc = *cache;
                    const Tensor& Xv = gr.value(ix);
                    const double* wi = gr.value(iwi).data().data();
                    const double* wh = gr.value(iwh).data().data();
                    double* gx = gr.requires_grad(ix) ? gr.grad_buffer(ix).data().data() : nullptr;
                    double* gwi = gr.requires_grad(iwi) ? gr.grad_buffer(iwi).data().data() : nullptr;
                    double* gwh = gr.requires_grad(iwh) ? gr.grad_buffer(iwh).data().data() : nullptr;
                    double* gbi = gr.requires_grad(ibi) ? gr.grad_buffer(ibi).data().data() : nullptr;
                    double* gbh = gr.requires_grad(ibh) ? gr.grad_buffer(ibh).data().data() : nullptr;

                    const auto gout = gr.grad_of(self).data();
                    std::vector<double> dh(gout.begin(), gout.end());
                    std::vector<double> dgi(B * G), dgh(B * G), dh_prev(step), xs(B * C);
                    for (std::size_t t = L; t-- > 0;) {
                      const double* hp = &cc.h_prev[t * step];
                      const double* rr = &cc.r[t * step];
                      const double* uu = &cc.u[t * step];
                      const double* nn_ = &cc.n[t * step];
                      const double* hn = &cc.hn[t * step];
                      for (std::size_t b = 0; b < B; ++b) {
                        for (std::size_t k = 0; k < H; ++k) {
                          const std::size_t o = b * H + k;
                          const double dn = dh[o] * (1.0 - uu[o]);
                          const double du = dh[o] * (hp[o] - nn_[o]);
                          dh_prev[o] = dh[o] * uu[o];
                          const double dn_pre = dn * (1.0 - nn_[o] * nn_[o]);
                          const double dr = dn_pre * hn[o];
                          const double dr_pre = dr * rr[o] * (1.0 - rr[o]);
                          const double du_pre = du * uu[o] * (1.0 - uu[o]);
                          dgi[b * G + k] = dr_pre;
                          dgi[b * G + H + k] = du_pre;
                          dgi[b * G + 2 * H + k] = dn_pre;
                          dgh[b * G + k] = dr_pre;
                          dgh[b * G + H + k] = du_pre;
                          dgh[b * G + 2 * H + k] = dn_pre * rr[o];
                        }
                      }
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t c = 0; c < C; ++c) xs[b * C + c] = Xv[(b * C + c) * L + t];
                      if (gbi || gbh) {
                        for (std::size_t b = 0; b < B; ++b)
                          for (std::size_t j = 0; j < G; ++j) {
                            if (gbi) gbi[j] += dgi[b * G + j];
                            if (gbh) gbh[j] += dgh[b * G + j];
                          }
                      }
                      for (std::size_t b = 0; b < B; ++b) {
                        const double* dgib = &dgi[b * G];
                        const double* dghb = &dgh[b * G];
                        if (gwi) {
                          for (std::size_t c = 0; c < C; ++c) {
                            const double xv = xs[b * C + c];
                            double* row = gwi + c * G;
                            for (std::size_t j = 0; j < G; ++j) row[j] += xv * dgib[j];
                          }
                        }
                        if (gx) {
                          for (std::size_t c = 0; c < C; ++c) {
                            const double* wrow = wi + c * G;
                            double acc = 0.0;
                            for (std::size_t j = 0; j < G; ++j) acc += dgib[j] * wrow[j];
                            gx[(b * C + c) * L + t] += acc;
                          }
                        }
                        for (std::size_t k = 0; k < H; ++k) {
                          const double hv = hp[b * H + k];
                          const double* wrow = wh + k * G;
                          double acc = 0.0;
                          for (std::size_t j = 0; j < G; ++j) acc += dghb[j] * wrow[j];
                          dh_prev[b * H + k] += acc;
                          if (gwh && hv != 0.0) {
                            double* row = gwh + k * G;
                            for (std::size_t j = 0; j < G; ++j) row[j] += hv * dghb[j];
                          }
                        }
                      }
                      dh.swap(dh_prev);
                    }
                  });
}

}  // namespace adexsbi::nn
