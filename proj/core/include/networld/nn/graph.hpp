#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "networld/nn/tensor.hpp"

namespace networld::nn {

template <typename S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using EMap = Eigen::Map<EMat<S>>;
template <typename S>
using ECMap = Eigen::Map<const EMat<S>>;

// Reverse-mode computation tape. Operations evaluate eagerly and, when any
// input requires a gradient, register a closure that routes adjoints back to
// their inputs. One Graph instance serves one forward/backward episode and is
// confined to a single thread; independent graphs may run in parallel.
//
// Forward evaluation is deterministic: identical inputs and parameters yield
// bit-identical outputs on repeated runs.
template <typename S>
class Graph {
 public:
  // ---- leaves ----

  // Constant: participates in forward only.
  int constant(Tensor<S> v) { return push(std::move(v), false, nullptr); }

  // Differentiable non-parameter leaf (e.g. an input we want gradients for).
  int leaf(Tensor<S> v) { return push(std::move(v), true, nullptr); }

  // Parameter leaf; backward() accumulates into p.grad.
  int param(Parameter<S>& p) { return push(p.value, true, &p); }

  const Tensor<S>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor<S>& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  size_t size() const { return nodes_.size(); }

  // ---- linear algebra ----

  // c = a * b, a:[m,k] b:[k,n]
  int matmul(int a, int b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    check(av.ndim() == 2 && bv.ndim() == 2 && av.size(1) == bv.size(0), "matmul", a, b);
    const Index m = av.size(0), k = av.size(1), n = bv.size(1);
    Tensor<S> out({m, n});
    EMap<S>(out.data(), m, n).noalias() = ECMap<S>(av.data(), m, k) * ECMap<S>(bv.data(), k, n);
    return push(std::move(out), needs(a, b), [this, a, b, m, k, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      ECMap<S> gm(g.data(), m, n);
      if (wants(a)) EMap<S>(gbuf(a), m, k).noalias() += gm * ECMap<S>(val(b).data(), k, n).transpose();
      if (wants(b)) EMap<S>(gbuf(b), k, n).noalias() += ECMap<S>(val(a).data(), m, k).transpose() * gm;
    });
  }

  // c = a * b^T, a:[m,k] b:[n,k]; the natural dense-layer product.
  int matmul_nt(int a, int b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    check(av.ndim() == 2 && bv.ndim() == 2 && av.size(1) == bv.size(1), "matmul_nt", a, b);
    const Index m = av.size(0), k = av.size(1), n = bv.size(0);
    Tensor<S> out({m, n});
    EMap<S>(out.data(), m, n).noalias() = ECMap<S>(av.data(), m, k) * ECMap<S>(bv.data(), n, k).transpose();
    return push(std::move(out), needs(a, b), [this, a, b, m, k, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      ECMap<S> gm(g.data(), m, n);
      if (wants(a)) EMap<S>(gbuf(a), m, k).noalias() += gm * ECMap<S>(val(b).data(), n, k);
      if (wants(b)) EMap<S>(gbuf(b), n, k).noalias() += gm.transpose() * ECMap<S>(val(a).data(), m, k);
    });
  }

  // ---- elementwise / broadcast ----

  int add(int a, int b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    check(av.same_shape(bv), "add", a, b);
    Tensor<S> out(av.shape());
    const Index n = av.numel();
    for (Index i = 0; i < n; ++i) out[i] = av[i] + bv[i];
    return push(std::move(out), needs(a, b), [this, a, b, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      if (wants(a)) {
        S* da = gbuf(a);
        for (Index i = 0; i < n; ++i) da[i] += g[i];
      }
      if (wants(b)) {
        S* db = gbuf(b);
        for (Index i = 0; i < n; ++i) db[i] += g[i];
      }
    });
  }

  // y[i,j] = x[i,j] + v[j]
  int add_rowvec(int x, int v) {
    const auto& xv = val(x);
    const auto& vv = val(v);
    check(xv.ndim() == 2 && vv.ndim() == 1 && xv.size(1) == vv.size(0), "add_rowvec", x, v);
    const Index m = xv.size(0), n = xv.size(1);
    Tensor<S> out({m, n});
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) out.at(i, j) = xv.at(i, j) + vv[j];
    return push(std::move(out), needs(x, v), [this, x, v, m, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      if (wants(x)) {
        S* dx = gbuf(x);
        for (Index i = 0; i < m * n; ++i) dx[i] += g[i];
      }
      if (wants(v)) {
        S* dv = gbuf(v);
        for (Index i = 0; i < m; ++i)
          for (Index j = 0; j < n; ++j) dv[j] += g[i * n + j];
      }
    });
  }

  // y[b,c,l] = x[b,c,l] + v[c]
  int add_chanvec(int x, int v) {
    const auto& xv = val(x);
    const auto& vv = val(v);
    check(xv.ndim() == 3 && vv.ndim() == 1 && xv.size(1) == vv.size(0), "add_chanvec", x, v);
    const Index B = xv.size(0), C = xv.size(1), L = xv.size(2);
    Tensor<S> out(xv.shape());
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c) {
        const S bias = vv[c];
        for (Index l = 0; l < L; ++l) out.at(b, c, l) = xv.at(b, c, l) + bias;
      }
    return push(std::move(out), needs(x, v), [this, x, v, B, C, L](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      if (wants(x)) {
        S* dx = gbuf(x);
        const Index n = B * C * L;
        for (Index i = 0; i < n; ++i) dx[i] += g[i];
      }
      if (wants(v)) {
        S* dv = gbuf(v);
        for (Index b = 0; b < B; ++b)
          for (Index c = 0; c < C; ++c) {
            S acc = S(0);
            for (Index l = 0; l < L; ++l) acc += g[(b * C + c) * L + l];
            dv[c] += acc;
          }
      }
    });
  }

  // y[b,c,l] = x[b,c,l] + e[b,c]; per-sample channel bias (conditioning).
  int add_chan_embed(int x, int e) {
    const auto& xv = val(x);
    const auto& ev = val(e);
    check(xv.ndim() == 3 && ev.ndim() == 2 && xv.size(0) == ev.size(0) && xv.size(1) == ev.size(1),
          "add_chan_embed", x, e);
    const Index B = xv.size(0), C = xv.size(1), L = xv.size(2);
    Tensor<S> out(xv.shape());
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c) {
        const S bias = ev.at(b, c);
        for (Index l = 0; l < L; ++l) out.at(b, c, l) = xv.at(b, c, l) + bias;
      }
    return push(std::move(out), needs(x, e), [this, x, e, B, C, L](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      if (wants(x)) {
        S* dx = gbuf(x);
        const Index n = B * C * L;
        for (Index i = 0; i < n; ++i) dx[i] += g[i];
      }
      if (wants(e)) {
        S* de = gbuf(e);
        for (Index b = 0; b < B; ++b)
          for (Index c = 0; c < C; ++c) {
            S acc = S(0);
            for (Index l = 0; l < L; ++l) acc += g[(b * C + c) * L + l];
            de[b * C + c] += acc;
          }
      }
    });
  }

  int scale(int x, double c) {
    const auto& xv = val(x);
    Tensor<S> out(xv.shape());
    const Index n = xv.numel();
    const S cs = static_cast<S>(c);
    for (Index i = 0; i < n; ++i) out[i] = cs * xv[i];
    return push(std::move(out), needs(x), [this, x, cs, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index i = 0; i < n; ++i) dx[i] += cs * g[i];
    });
  }

  // Sigmoid-weighted linear unit, y = x * sigmoid(x).
  int silu(int x) {
    const auto& xv = val(x);
    Tensor<S> out(xv.shape());
    const Index n = xv.numel();
    for (Index i = 0; i < n; ++i) {
      const S s = sigmoid(xv[i]);
      out[i] = xv[i] * s;
    }
    return push(std::move(out), needs(x), [this, x, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      const auto& xv = val(x);
      S* dx = gbuf(x);
      for (Index i = 0; i < n; ++i) {
        const S s = sigmoid(xv[i]);
        dx[i] += g[i] * (s * (S(1) + xv[i] * (S(1) - s)));
      }
    });
  }

  // ---- normalization ----

  // Per-sample group normalization over [B,C,L] with affine parameters.
  int group_norm(int x, int gamma, int beta, int groups, double eps = 1e-5) {
    const auto& xv = val(x);
    const auto& gv = val(gamma);
    const auto& bv = val(beta);
    check(xv.ndim() == 3 && gv.ndim() == 1 && bv.ndim() == 1 && gv.size(0) == xv.size(1) &&
              bv.size(0) == xv.size(1) && xv.size(1) % groups == 0,
          "group_norm", x, gamma);
    const Index B = xv.size(0), C = xv.size(1), L = xv.size(2);
    const Index cg = C / groups;   // channels per group
    const Index m = cg * L;        // elements per (sample, group)
    Tensor<S> xhat(xv.shape());
    Tensor<S> inv_std({B, static_cast<Index>(groups)});
    Tensor<S> out(xv.shape());
    for (Index b = 0; b < B; ++b) {
      for (Index gidx = 0; gidx < groups; ++gidx) {
        const Index c0 = gidx * cg;
        double mean = 0.0;
        for (Index c = c0; c < c0 + cg; ++c)
          for (Index l = 0; l < L; ++l) mean += static_cast<double>(xv.at(b, c, l));
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (Index c = c0; c < c0 + cg; ++c)
          for (Index l = 0; l < L; ++l) {
            const double d = static_cast<double>(xv.at(b, c, l)) - mean;
            var += d * d;
          }
        var /= static_cast<double>(m);
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std.at(b, gidx) = static_cast<S>(istd);
        for (Index c = c0; c < c0 + cg; ++c)
          for (Index l = 0; l < L; ++l) {
            const S xh = static_cast<S>((static_cast<double>(xv.at(b, c, l)) - mean) * istd);
            xhat.at(b, c, l) = xh;
            out.at(b, c, l) = gv[c] * xh + bv[c];
          }
      }
    }
    return push(std::move(out), needs(x, gamma, beta),
                [this, x, gamma, beta, groups, B, C, L, cg, m, xhat = std::move(xhat),
                 inv_std = std::move(inv_std)](int id) {
                  const auto& g = nodes_[static_cast<size_t>(id)].grad;
                  const auto& gv = val(gamma);
                  if (wants(gamma) || wants(beta)) {
                    S* dgamma = wants(gamma) ? gbuf(gamma) : nullptr;
                    S* dbeta = wants(beta) ? gbuf(beta) : nullptr;
                    for (Index b = 0; b < B; ++b)
                      for (Index c = 0; c < C; ++c)
                        for (Index l = 0; l < L; ++l) {
                          const S gi = g[(b * C + c) * L + l];
                          if (dgamma) dgamma[c] += gi * xhat.at(b, c, l);
                          if (dbeta) dbeta[c] += gi;
                        }
                  }
                  if (!wants(x)) return;
                  S* dx = gbuf(x);
                  for (Index b = 0; b < B; ++b) {
                    for (Index gi = 0; gi < groups; ++gi) {
                      const Index c0 = gi * cg;
                      // dL/dxhat restricted to the group
                      double sum_h = 0.0, sum_hx = 0.0;
                      for (Index c = c0; c < c0 + cg; ++c)
                        for (Index l = 0; l < L; ++l) {
                          const double h = static_cast<double>(g[(b * C + c) * L + l]) *
                                           static_cast<double>(gv[c]);
                          sum_h += h;
                          sum_hx += h * static_cast<double>(xhat.at(b, c, l));
                        }
                      const double mean_h = sum_h / static_cast<double>(m);
                      const double mean_hx = sum_hx / static_cast<double>(m);
                      const double istd = static_cast<double>(inv_std.at(b, gi));
                      for (Index c = c0; c < c0 + cg; ++c)
                        for (Index l = 0; l < L; ++l) {
                          const double h = static_cast<double>(g[(b * C + c) * L + l]) *
                                           static_cast<double>(gv[c]);
                          const double xh = static_cast<double>(xhat.at(b, c, l));
                          dx[(b * C + c) * L + l] +=
                              static_cast<S>(istd * (h - mean_h - xh * mean_hx));
                        }
                    }
                  }
                });
  }

  // ---- temporal convolutions ----

  // x:[B,Ci,L] w:[Co,Ci,K] b:[Co] -> [B,Co,Lout]; zero padding.
  int conv1d(int x, int w, int b, int stride, int pad) {
    const auto& xv = val(x);
    const auto& wv = val(w);
    const auto& bv = val(b);
    check(xv.ndim() == 3 && wv.ndim() == 3 && xv.size(1) == wv.size(1), "conv1d", x, w);
    const Index B = xv.size(0), Ci = xv.size(1), L = xv.size(2);
    const Index Co = wv.size(0), K = wv.size(2);
    check(bv.ndim() == 1 && bv.size(0) == Co, "conv1d bias", x, b);
    const Index Lout = (L + 2 * pad - K) / stride + 1;
    util::require(Lout >= 1, "conv1d: output length would be ", Lout, " for input length ", L);
    Tensor<S> col({B, Ci * K, Lout});
    Tensor<S> out({B, Co, Lout});
    for (Index bb = 0; bb < B; ++bb) {
      im2col(xv, bb, K, stride, pad, Lout, col);
      EMap<S>(out.data() + bb * Co * Lout, Co, Lout).noalias() =
          ECMap<S>(wv.data(), Co, Ci * K) * ECMap<S>(col.data() + bb * Ci * K * Lout, Ci * K, Lout);
      for (Index co = 0; co < Co; ++co) {
        const S bias = bv[co];
        for (Index l = 0; l < Lout; ++l) out.at(bb, co, l) += bias;
      }
    }
    return push(std::move(out), needs(x, w, b),
                [this, x, w, b, stride, pad, B, Ci, L, Co, K, Lout, col = std::move(col)](int id) {
                  const auto& g = nodes_[static_cast<size_t>(id)].grad;
                  const auto& wv = val(w);
                  if (wants(b)) {
                    S* db = gbuf(b);
                    for (Index bb = 0; bb < B; ++bb)
                      for (Index co = 0; co < Co; ++co) {
                        S acc = S(0);
                        for (Index l = 0; l < Lout; ++l) acc += g[(bb * Co + co) * Lout + l];
                        db[co] += acc;
                      }
                  }
                  Tensor<S> dcol({Ci * K, Lout});
                  for (Index bb = 0; bb < B; ++bb) {
                    ECMap<S> gm(g.data() + bb * Co * Lout, Co, Lout);
                    if (wants(w)) {
                      EMap<S>(gbuf(w), Co, Ci * K).noalias() +=
                          gm * ECMap<S>(col.data() + bb * Ci * K * Lout, Ci * K, Lout).transpose();
                    }
                    if (wants(x)) {
                      EMap<S>(dcol.data(), Ci * K, Lout).noalias() =
                          ECMap<S>(wv.data(), Co, Ci * K).transpose() * gm;
                      col2im_add(dcol, bb, Ci, L, K, stride, pad, Lout, gbuf(x));
                    }
                  }
                });
  }

  // Transposed temporal convolution. x:[B,Ci,L] w:[Ci,Co,K] b:[Co].
  // Lout = (L-1)*stride - 2*pad + K.
  int conv1d_transpose(int x, int w, int b, int stride, int pad) {
    const auto& xv = val(x);
    const auto& wv = val(w);
    const auto& bv = val(b);
    check(xv.ndim() == 3 && wv.ndim() == 3 && xv.size(1) == wv.size(0), "conv1d_transpose", x, w);
    const Index B = xv.size(0), Ci = xv.size(1), L = xv.size(2);
    const Index Co = wv.size(1), K = wv.size(2);
    check(bv.ndim() == 1 && bv.size(0) == Co, "conv1d_transpose bias", x, b);
    const Index Lout = (L - 1) * stride - 2 * pad + K;
    util::require(Lout >= 1, "conv1d_transpose: output length would be ", Lout);
    Tensor<S> out({B, Co, Lout});
    Tensor<S> tmp({Co * K, L});
    for (Index bb = 0; bb < B; ++bb) {
      // tmp[(co,k), i] = sum_ci w[ci,co,k] * x[bb,ci,i]
      EMap<S>(tmp.data(), Co * K, L).noalias() =
          ECMap<S>(wv.data(), Ci, Co * K).transpose() * ECMap<S>(xv.data() + bb * Ci * L, Ci, L);
      for (Index co = 0; co < Co; ++co) {
        const S bias = bv[co];
        for (Index j = 0; j < Lout; ++j) out.at(bb, co, j) = bias;
        for (Index k = 0; k < K; ++k) {
          const S* src = tmp.data() + (co * K + k) * L;
          for (Index i = 0; i < L; ++i) {
            const Index j = i * stride - pad + k;
            if (j >= 0 && j < Lout) out.at(bb, co, j) += src[i];
          }
        }
      }
    }
    return push(std::move(out), needs(x, w, b),
                [this, x, w, b, stride, pad, B, Ci, L, Co, K, Lout](int id) {
                  const auto& g = nodes_[static_cast<size_t>(id)].grad;
                  const auto& xv = val(x);
                  const auto& wv = val(w);
                  if (wants(b)) {
                    S* db = gbuf(b);
                    for (Index bb = 0; bb < B; ++bb)
                      for (Index co = 0; co < Co; ++co) {
                        S acc = S(0);
                        for (Index j = 0; j < Lout; ++j) acc += g[(bb * Co + co) * Lout + j];
                        db[co] += acc;
                      }
                  }
                  Tensor<S> dtmp({Co * K, L});
                  for (Index bb = 0; bb < B; ++bb) {
                    dtmp.fill(S(0));
                    for (Index co = 0; co < Co; ++co)
                      for (Index k = 0; k < K; ++k) {
                        S* dst = dtmp.data() + (co * K + k) * L;
                        for (Index i = 0; i < L; ++i) {
                          const Index j = i * stride - pad + k;
                          if (j >= 0 && j < Lout) dst[i] = g[(bb * Co + co) * Lout + j];
                        }
                      }
                    if (wants(w)) {
                      EMap<S>(gbuf(w), Ci, Co * K).noalias() +=
                          ECMap<S>(xv.data() + bb * Ci * L, Ci, L) *
                          ECMap<S>(dtmp.data(), Co * K, L).transpose();
                    }
                    if (wants(x)) {
                      EMap<S>(gbuf(x) + bb * Ci * L, Ci, L).noalias() +=
                          ECMap<S>(wv.data(), Ci, Co * K) * ECMap<S>(dtmp.data(), Co * K, L);
                    }
                  }
                });
  }

  // ---- shape plumbing ----

  int concat_chan(int a, int b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    check(av.ndim() == 3 && bv.ndim() == 3 && av.size(0) == bv.size(0) && av.size(2) == bv.size(2),
          "concat_chan", a, b);
    const Index B = av.size(0), C1 = av.size(1), C2 = bv.size(1), L = av.size(2);
    Tensor<S> out({B, C1 + C2, L});
    for (Index bb = 0; bb < B; ++bb) {
      std::copy(av.data() + bb * C1 * L, av.data() + (bb + 1) * C1 * L, out.data() + bb * (C1 + C2) * L);
      std::copy(bv.data() + bb * C2 * L, bv.data() + (bb + 1) * C2 * L,
                out.data() + bb * (C1 + C2) * L + C1 * L);
    }
    return push(std::move(out), needs(a, b), [this, a, b, B, C1, C2, L](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      for (Index bb = 0; bb < B; ++bb) {
        if (wants(a)) {
          S* da = gbuf(a) + bb * C1 * L;
          const S* src = g.data() + bb * (C1 + C2) * L;
          for (Index i = 0; i < C1 * L; ++i) da[i] += src[i];
        }
        if (wants(b)) {
          S* db = gbuf(b) + bb * C2 * L;
          const S* src = g.data() + bb * (C1 + C2) * L + C1 * L;
          for (Index i = 0; i < C2 * L; ++i) db[i] += src[i];
        }
      }
    });
  }

  int concat_cols(int a, int b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    check(av.ndim() == 2 && bv.ndim() == 2 && av.size(0) == bv.size(0), "concat_cols", a, b);
    const Index m = av.size(0), p = av.size(1), q = bv.size(1);
    Tensor<S> out({m, p + q});
    for (Index i = 0; i < m; ++i) {
      std::copy(av.data() + i * p, av.data() + (i + 1) * p, out.data() + i * (p + q));
      std::copy(bv.data() + i * q, bv.data() + (i + 1) * q, out.data() + i * (p + q) + p);
    }
    return push(std::move(out), needs(a, b), [this, a, b, m, p, q](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      for (Index i = 0; i < m; ++i) {
        if (wants(a)) {
          S* da = gbuf(a) + i * p;
          for (Index j = 0; j < p; ++j) da[j] += g[i * (p + q) + j];
        }
        if (wants(b)) {
          S* db = gbuf(b) + i * q;
          for (Index j = 0; j < q; ++j) db[j] += g[i * (p + q) + p + j];
        }
      }
    });
  }

  // Row lookup into an embedding table. ids are constant.
  int embed_rows(int table, std::vector<int> ids) {
    const auto& tv = val(table);
    check(tv.ndim() == 2, "embed_rows", table, table);
    const Index V = tv.size(0), E = tv.size(1);
    const Index B = static_cast<Index>(ids.size());
    for (int id : ids) util::require(id >= 0 && id < V, "embedding id ", id, " out of range [0,", V, ")");
    Tensor<S> out({B, E});
    for (Index i = 0; i < B; ++i)
      std::copy(tv.data() + ids[static_cast<size_t>(i)] * E, tv.data() + (ids[static_cast<size_t>(i)] + 1) * E,
                out.data() + i * E);
    return push(std::move(out), needs(table), [this, table, ids = std::move(ids), E](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dt = gbuf(table);
      for (size_t i = 0; i < ids.size(); ++i) {
        S* row = dt + static_cast<Index>(ids[i]) * E;
        const S* src = g.data() + static_cast<Index>(i) * E;
        for (Index j = 0; j < E; ++j) row[j] += src[j];
      }
    });
  }

  // [B*H, d] laid out segment-major -> [B, d, H] channel-major sequences.
  int rows_to_chl(int x, Index B, Index H) {
    const auto& xv = val(x);
    check(xv.ndim() == 2 && xv.size(0) == B * H, "rows_to_chl", x, x);
    const Index d = xv.size(1);
    Tensor<S> out({B, d, H});
    for (Index b = 0; b < B; ++b)
      for (Index t = 0; t < H; ++t)
        for (Index c = 0; c < d; ++c) out.at(b, c, t) = xv.at(b * H + t, c);
    return push(std::move(out), needs(x), [this, x, B, H, d](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index b = 0; b < B; ++b)
        for (Index t = 0; t < H; ++t)
          for (Index c = 0; c < d; ++c) dx[(b * H + t) * d + c] += g.at(b, c, t);
    });
  }

  // Mean of src rows sharing a group id; groups of size zero yield zeros.
  // group[r] == -1 excludes a row.
  int scatter_mean(int x, std::vector<Index> group, Index num_groups) {
    const auto& xv = val(x);
    check(xv.ndim() == 2 && static_cast<Index>(group.size()) == xv.size(0), "scatter_mean", x, x);
    const Index d = xv.size(1);
    std::vector<Index> count(static_cast<size_t>(num_groups), 0);
    for (Index gid : group) {
      util::require(gid >= -1 && gid < num_groups, "scatter_mean: group id ", gid, " out of range");
      if (gid >= 0) ++count[static_cast<size_t>(gid)];
    }
    Tensor<S> out({num_groups, d});
    for (Index r = 0; r < xv.size(0); ++r) {
      const Index gid = group[static_cast<size_t>(r)];
      if (gid < 0) continue;
      for (Index c = 0; c < d; ++c) out.at(gid, c) += xv.at(r, c);
    }
    for (Index gidx = 0; gidx < num_groups; ++gidx) {
      if (count[static_cast<size_t>(gidx)] == 0) continue;
      const S inv = S(1) / static_cast<S>(count[static_cast<size_t>(gidx)]);
      for (Index c = 0; c < d; ++c) out.at(gidx, c) *= inv;
    }
    return push(std::move(out), needs(x),
                [this, x, group = std::move(group), count = std::move(count), d](int id) {
                  const auto& g = nodes_[static_cast<size_t>(id)].grad;
                  S* dx = gbuf(x);
                  for (size_t r = 0; r < group.size(); ++r) {
                    const Index gid = group[r];
                    if (gid < 0) continue;
                    const S inv = S(1) / static_cast<S>(count[static_cast<size_t>(gid)]);
                    for (Index c = 0; c < d; ++c) dx[static_cast<Index>(r) * d + c] += inv * g.at(gid, c);
                  }
                });
  }

  int gather_rows(int x, std::vector<Index> idx) {
    const auto& xv = val(x);
    check(xv.ndim() == 2, "gather_rows", x, x);
    const Index R = xv.size(0), d = xv.size(1);
    const Index I = static_cast<Index>(idx.size());
    for (Index i : idx) util::require(i >= 0 && i < R, "gather_rows: row ", i, " out of range [0,", R, ")");
    Tensor<S> out({I, d});
    for (Index i = 0; i < I; ++i)
      std::copy(xv.data() + idx[static_cast<size_t>(i)] * d, xv.data() + (idx[static_cast<size_t>(i)] + 1) * d,
                out.data() + i * d);
    return push(std::move(out), needs(x), [this, x, idx = std::move(idx), d](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (size_t i = 0; i < idx.size(); ++i) {
        S* row = dx + idx[i] * d;
        const S* src = g.data() + static_cast<Index>(i) * d;
        for (Index j = 0; j < d; ++j) row[j] += src[j];
      }
    });
  }

  // Forward identity; gradient does not flow past this node.
  int stopgrad(int x) { return push(val(x), false, nullptr); }

  // y_b = a[b] * x_b + c[b] * other_b, per-sample over dim 0.
  int lincomb_per_sample(int x, const Tensor<S>& other, std::vector<S> a, std::vector<S> c) {
    const auto& xv = val(x);
    check(xv.same_shape(other) && xv.size(0) == static_cast<Index>(a.size()) && a.size() == c.size(),
          "lincomb_per_sample", x, x);
    const Index B = xv.size(0);
    const Index stride = xv.numel() / B;
    Tensor<S> out(xv.shape());
    for (Index b = 0; b < B; ++b) {
      const S ab = a[static_cast<size_t>(b)], cb = c[static_cast<size_t>(b)];
      const S* xp = xv.data() + b * stride;
      const S* op = other.data() + b * stride;
      S* yp = out.data() + b * stride;
      for (Index i = 0; i < stride; ++i) yp[i] = ab * xp[i] + cb * op[i];
    }
    return push(std::move(out), needs(x), [this, x, a = std::move(a), B, stride](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index b = 0; b < B; ++b) {
        const S ab = a[static_cast<size_t>(b)];
        const S* gp = g.data() + b * stride;
        S* dp = dx + b * stride;
        for (Index i = 0; i < stride; ++i) dp[i] += ab * gp[i];
      }
    });
  }

  // ---- reductions & losses ----

  // Mean squared error against a constant target; scalar output.
  int mse(int pred, const Tensor<S>& target) {
    const auto& pv = val(pred);
    check(pv.same_shape(target), "mse", pred, pred);
    const Index n = pv.numel();
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double d = static_cast<double>(pv[i]) - static_cast<double>(target[i]);
      acc += d * d;
    }
    Tensor<S> out({1});
    out[0] = static_cast<S>(acc / static_cast<double>(n));
    return push(std::move(out), needs(pred), [this, pred, target, n](int id) {
      const S gy = nodes_[static_cast<size_t>(id)].grad[0];
      const auto& pv = val(pred);
      S* dp = gbuf(pred);
      const S c = gy * S(2) / static_cast<S>(n);
      for (Index i = 0; i < n; ++i) dp[i] += c * (pv[i] - target[i]);
    });
  }

  int softmax_rows(int x) {
    const auto& xv = val(x);
    check(xv.ndim() == 2, "softmax_rows", x, x);
    const Index m = xv.size(0), K = xv.size(1);
    Tensor<S> out({m, K});
    softmax_into(xv, out);
    Tensor<S> probs = out;  // saved for backward
    return push(std::move(out), needs(x), [this, x, probs = std::move(probs), m, K](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index i = 0; i < m; ++i) {
        double dot = 0.0;
        for (Index k = 0; k < K; ++k) dot += static_cast<double>(g.at(i, k)) * static_cast<double>(probs.at(i, k));
        for (Index k = 0; k < K; ++k)
          dx[i * K + k] += probs.at(i, k) * (g.at(i, k) - static_cast<S>(dot));
      }
    });
  }

  // Per-row cross entropy between softmax(logits) and constant soft targets
  // (rows of `target` must sum to 1).
  int softmax_xent_rows(int logits, const Tensor<S>& target) {
    const auto& xv = val(logits);
    check(xv.ndim() == 2 && xv.same_shape(target), "softmax_xent_rows", logits, logits);
    const Index m = xv.size(0), K = xv.size(1);
    Tensor<S> probs({m, K});
    softmax_into(xv, probs);
    Tensor<S> out({m});
    for (Index i = 0; i < m; ++i) {
      // CE = logsumexp(x) - sum_k t_k x_k
      double mx = static_cast<double>(xv.at(i, 0));
      for (Index k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(xv.at(i, k)));
      double lse = 0.0, tx = 0.0;
      for (Index k = 0; k < K; ++k) {
        lse += std::exp(static_cast<double>(xv.at(i, k)) - mx);
        tx += static_cast<double>(target.at(i, k)) * static_cast<double>(xv.at(i, k));
      }
      out[i] = static_cast<S>(mx + std::log(lse) - tx);
    }
    return push(std::move(out), needs(logits),
                [this, logits, target, probs = std::move(probs), m, K](int id) {
                  const auto& g = nodes_[static_cast<size_t>(id)].grad;
                  S* dx = gbuf(logits);
                  for (Index i = 0; i < m; ++i) {
                    const S gi = g[i];
                    for (Index k = 0; k < K; ++k)
                      dx[i * K + k] += gi * (probs.at(i, k) - target.at(i, k));
                  }
                });
  }

  // y[i] = sum_k x[i,k] * c[k]
  int rowdot_const(int x, const Tensor<S>& c) {
    const auto& xv = val(x);
    check(xv.ndim() == 2 && c.ndim() == 1 && xv.size(1) == c.size(0), "rowdot_const", x, x);
    const Index m = xv.size(0), K = xv.size(1);
    Tensor<S> out({m});
    for (Index i = 0; i < m; ++i) {
      double acc = 0.0;
      for (Index k = 0; k < K; ++k) acc += static_cast<double>(xv.at(i, k)) * static_cast<double>(c[k]);
      out[i] = static_cast<S>(acc);
    }
    return push(std::move(out), needs(x), [this, x, c, m, K](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index i = 0; i < m; ++i)
        for (Index k = 0; k < K; ++k) dx[i * K + k] += g[i] * c[k];
    });
  }

  // Elementwise sign-symmetric exponential on a vector.
  int symexp_vec(int x) {
    const auto& xv = val(x);
    check(xv.ndim() == 1, "symexp_vec", x, x);
    const Index n = xv.size(0);
    Tensor<S> out({n});
    for (Index i = 0; i < n; ++i) {
      const double v = static_cast<double>(xv[i]);
      out[i] = static_cast<S>(v >= 0 ? std::expm1(v) : -std::expm1(-v));
    }
    return push(std::move(out), needs(x), [this, x, n](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      const auto& xv = val(x);
      S* dx = gbuf(x);
      for (Index i = 0; i < n; ++i)
        dx[i] += g[i] * static_cast<S>(std::exp(std::abs(static_cast<double>(xv[i]))));
    });
  }

  int mean_vec(int x) {
    const auto& xv = val(x);
    const Index n = xv.numel();
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) acc += static_cast<double>(xv[i]);
    Tensor<S> out({1});
    out[0] = static_cast<S>(acc / static_cast<double>(n));
    return push(std::move(out), needs(x), [this, x, n](int id) {
      const S gy = nodes_[static_cast<size_t>(id)].grad[0];
      S* dx = gbuf(x);
      const S c = gy / static_cast<S>(n);
      for (Index i = 0; i < n; ++i) dx[i] += c;
    });
  }

  int sum_vec(int x) {
    const auto& xv = val(x);
    const Index n = xv.numel();
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) acc += static_cast<double>(xv[i]);
    Tensor<S> out({1});
    out[0] = static_cast<S>(acc);
    return push(std::move(out), needs(x), [this, x, n](int id) {
      const S gy = nodes_[static_cast<size_t>(id)].grad[0];
      S* dx = gbuf(x);
      for (Index i = 0; i < n; ++i) dx[i] += gy;
    });
  }

  // Weighted sum of scalar nodes.
  int wsum(const std::vector<std::pair<int, double>>& terms) {
    util::require(!terms.empty(), "wsum: no terms");
    double acc = 0.0;
    bool any = false;
    for (const auto& [id, wgt] : terms) {
      check(val(id).numel() == 1, "wsum", id, id);
      acc += wgt * static_cast<double>(val(id)[0]);
      any = any || nodes_[static_cast<size_t>(id)].requires_grad;
    }
    Tensor<S> out({1});
    out[0] = static_cast<S>(acc);
    return push(std::move(out), any, [this, terms](int id) {
      const S gy = nodes_[static_cast<size_t>(id)].grad[0];
      for (const auto& [tid, wgt] : terms)
        if (wants(tid)) gbuf(tid)[0] += static_cast<S>(wgt) * gy;
    });
  }

  // Mean over the time axis: [B,C,L] -> [B,C].
  int mean_time(int x) {
    const auto& xv = val(x);
    check(xv.ndim() == 3, "mean_time", x, x);
    const Index B = xv.size(0), C = xv.size(1), L = xv.size(2);
    Tensor<S> out({B, C});
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c) {
        double acc = 0.0;
        for (Index l = 0; l < L; ++l) acc += static_cast<double>(xv.at(b, c, l));
        out.at(b, c) = static_cast<S>(acc / static_cast<double>(L));
      }
    return push(std::move(out), needs(x), [this, x, B, C, L](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index b = 0; b < B; ++b)
        for (Index c = 0; c < C; ++c) {
          const S v = g.at(b, c) / static_cast<S>(L);
          for (Index l = 0; l < L; ++l) dx[(b * C + c) * L + l] += v;
        }
    });
  }

  // Right-pads the time axis by repeating the final frame.
  int pad_time_edge(int x, Index Lp) {
    const auto& xv = val(x);
    check(xv.ndim() == 3 && Lp >= xv.size(2), "pad_time_edge", x, x);
    const Index B = xv.size(0), C = xv.size(1), L = xv.size(2);
    if (Lp == L) return x;
    Tensor<S> out({B, C, Lp});
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c) {
        for (Index l = 0; l < L; ++l) out.at(b, c, l) = xv.at(b, c, l);
        for (Index l = L; l < Lp; ++l) out.at(b, c, l) = xv.at(b, c, L - 1);
      }
    return push(std::move(out), needs(x), [this, x, B, C, L, Lp](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index b = 0; b < B; ++b)
        for (Index c = 0; c < C; ++c) {
          for (Index l = 0; l < L; ++l) dx[(b * C + c) * L + l] += g.at(b, c, l);
          S acc = S(0);
          for (Index l = L; l < Lp; ++l) acc += g.at(b, c, l);
          dx[(b * C + c) * L + (L - 1)] += acc;
        }
    });
  }

  // y = x with time slot 0 replaced by src's slot 0; both [B,C,L]. Keeps the
  // conditioning frame of a noised segment clean, matching inference where
  // that frame is clamped to the observed state.
  int clamp_time0(int x, int src) {
    const auto& xv = val(x);
    const auto& sv = val(src);
    check(xv.ndim() == 3 && xv.same_shape(sv), "clamp_time0", x, src);
    const Index B = xv.size(0), C = xv.size(1), L = xv.size(2);
    Tensor<S> out = xv;
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c) out.at(b, c, 0) = sv.at(b, c, 0);
    return push(std::move(out), needs(x) || needs(src), [this, x, src, B, C, L](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      if (wants(x)) {
        S* dx = gbuf(x);
        for (Index b = 0; b < B; ++b)
          for (Index c = 0; c < C; ++c)
            for (Index l = 1; l < L; ++l) dx[(b * C + c) * L + l] += g.at(b, c, l);
      }
      if (wants(src)) {
        S* ds = gbuf(src);
        for (Index b = 0; b < B; ++b)
          for (Index c = 0; c < C; ++c) ds[(b * C + c) * L] += g.at(b, c, 0);
      }
    });
  }

  int crop_time(int x, Index L) {
    const auto& xv = val(x);
    check(xv.ndim() == 3 && L <= xv.size(2), "crop_time", x, x);
    const Index B = xv.size(0), C = xv.size(1), Lp = xv.size(2);
    if (Lp == L) return x;
    Tensor<S> out({B, C, L});
    for (Index b = 0; b < B; ++b)
      for (Index c = 0; c < C; ++c)
        for (Index l = 0; l < L; ++l) out.at(b, c, l) = xv.at(b, c, l);
    return push(std::move(out), needs(x), [this, x, B, C, L, Lp](int id) {
      const auto& g = nodes_[static_cast<size_t>(id)].grad;
      S* dx = gbuf(x);
      for (Index b = 0; b < B; ++b)
        for (Index c = 0; c < C; ++c)
          for (Index l = 0; l < L; ++l) dx[(b * C + c) * Lp + l] += g.at(b, c, l);
    });
  }

  // ---- backward ----

  // Seeds the (scalar) root with adjoint 1 and sweeps the tape in reverse.
  // Parameter gradients are accumulated into Parameter::grad.
  void backward(int root) {
    auto& rn = nodes_[static_cast<size_t>(root)];
    util::require(rn.value.numel() == 1, "backward root must be scalar, got ", shape_str(rn.value.shape()));
    util::require(rn.requires_grad, "backward root does not depend on any differentiable leaf");
    for (int i = 0; i <= root; ++i) {
      auto& n = nodes_[static_cast<size_t>(i)];
      if (n.requires_grad) {
        n.grad = Tensor<S>(n.value.shape());
      }
    }
    rn.grad[0] = S(1);
    for (int i = root; i >= 0; --i) {
      auto& n = nodes_[static_cast<size_t>(i)];
      if (n.requires_grad && n.back) n.back(i);
    }
    for (int i = 0; i <= root; ++i) {
      auto& n = nodes_[static_cast<size_t>(i)];
      if (n.param != nullptr) {
        const Index m = n.grad.numel();
        for (Index j = 0; j < m; ++j) n.param->grad[j] += n.grad[j];
      }
    }
  }

 private:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    std::function<void(int)> back;
    Parameter<S>* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;

  static S sigmoid(S x) { return S(1) / (S(1) + std::exp(-x)); }

  const Tensor<S>& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool wants(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  S* gbuf(int id) { return nodes_[static_cast<size_t>(id)].grad.data(); }

  bool needs(int a) const { return wants(a); }
  bool needs(int a, int b) const { return wants(a) || wants(b); }
  bool needs(int a, int b, int c) const { return wants(a) || wants(b) || wants(c); }

  void check(bool ok, const char* op, int a, int b) const {
    if (ok) return;
    util::fail("shape mismatch in ", op, ": lhs ", shape_str(val(a).shape()), ", rhs ",
               shape_str(val(b).shape()));
  }

  int push(Tensor<S> v, bool requires_grad, std::function<void(int)> back) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    if (requires_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push(Tensor<S> v, bool requires_grad, std::nullptr_t) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push(Tensor<S> v, bool requires_grad, Parameter<S>* p) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    n.param = p;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  static void softmax_into(const Tensor<S>& x, Tensor<S>& out) {
    const Index m = x.size(0), K = x.size(1);
    for (Index i = 0; i < m; ++i) {
      double mx = static_cast<double>(x.at(i, 0));
      for (Index k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(x.at(i, k)));
      double z = 0.0;
      for (Index k = 0; k < K; ++k) {
        const double e = std::exp(static_cast<double>(x.at(i, k)) - mx);
        out.at(i, k) = static_cast<S>(e);
        z += e;
      }
      const S inv = static_cast<S>(1.0 / z);
      for (Index k = 0; k < K; ++k) out.at(i, k) *= inv;
    }
  }

  static void im2col(const Tensor<S>& x, Index b, Index K, int stride, int pad, Index Lout, Tensor<S>& col) {
    const Index Ci = x.size(1), L = x.size(2);
    S* dst = col.data() + b * Ci * K * Lout;
    for (Index ci = 0; ci < Ci; ++ci) {
      const S* src = x.data() + (b * Ci + ci) * L;
      for (Index k = 0; k < K; ++k) {
        S* row = dst + (ci * K + k) * Lout;
        for (Index j = 0; j < Lout; ++j) {
          const Index pos = j * stride + k - pad;
          row[j] = (pos >= 0 && pos < L) ? src[pos] : S(0);
        }
      }
    }
  }

  static void col2im_add(const Tensor<S>& dcol, Index b, Index Ci, Index L, Index K, int stride, int pad,
                         Index Lout, S* dx) {
    for (Index ci = 0; ci < Ci; ++ci) {
      S* dst = dx + (b * Ci + ci) * L;
      for (Index k = 0; k < K; ++k) {
        const S* row = dcol.data() + (ci * K + k) * Lout;
        for (Index j = 0; j < Lout; ++j) {
          const Index pos = j * stride + k - pad;
          if (pos >= 0 && pos < L) dst[pos] += row[j];
        }
      }
    }
  }
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace networld::nn
