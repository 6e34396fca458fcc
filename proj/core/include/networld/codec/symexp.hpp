#pragma once

#include <cmath>
#include <vector>

#include "networld/nn/tensor.hpp"
#include "networld/util/require.hpp"

namespace networld::codec {

// Sign-symmetric log squash. Compresses magnitudes while keeping sign and
// exact zero; inverse of symexp.
inline double symlog(double x) { return x >= 0 ? std::log1p(x) : -std::log1p(-x); }
inline double symexp(double x) { return x >= 0 ? std::expm1(x) : -std::expm1(-x); }

enum class DecodeMode {
  kSymlogMean,   // symexp of the probability-weighted mean bin position
  kRawCenters,   // probability-weighted mean of raw bin values
};

// Discrete support for scalar returns: bins uniform in symlog space between
// lo and hi (raw values), i.e. exponentially spaced in raw space.
struct BinGrid {
  nn::Index num_bins = 0;
  double lo = 0.0, hi = 0.0;      // raw endpoints
  double lo_s = 0.0, hi_s = 0.0;  // symlog endpoints
  double step = 0.0;              // symlog spacing

  static BinGrid make(nn::Index num_bins, double lo, double hi) {
    util::require(num_bins >= 2, "bin grid needs at least 2 bins, got ", num_bins);
    util::require(lo < hi, "bin grid range is empty: [", lo, ", ", hi, "]");
    BinGrid g;
    g.num_bins = num_bins;
    g.lo = lo;
    g.hi = hi;
    g.lo_s = symlog(lo);
    g.hi_s = symlog(hi);
    g.step = (g.hi_s - g.lo_s) / static_cast<double>(num_bins - 1);
    return g;
  }

  double center_symlog(nn::Index k) const { return lo_s + step * static_cast<double>(k); }
  double center_raw(nn::Index k) const { return symexp(center_symlog(k)); }
};

// Sparse two-hot code: mass split between the two bins bracketing the value.
struct TwoHot {
  nn::Index lo_bin = 0, hi_bin = 0;
  double lo_w = 0.0, hi_w = 0.0;
};

inline TwoHot twohot_encode(const BinGrid& grid, double value) {
  const double s = symlog(value);
  TwoHot th;
  if (s <= grid.lo_s) {
    th.lo_bin = th.hi_bin = 0;
    th.lo_w = 1.0;
    th.hi_w = 0.0;
    return th;
  }
  if (s >= grid.hi_s) {
    th.lo_bin = th.hi_bin = grid.num_bins - 1;
    th.lo_w = 1.0;
    th.hi_w = 0.0;
    return th;
  }
  const double pos = (s - grid.lo_s) / grid.step;
  nn::Index k = static_cast<nn::Index>(std::floor(pos));
  if (k >= grid.num_bins - 1) k = grid.num_bins - 2;  // s == hi_s handled above
  const double frac = pos - static_cast<double>(k);
  th.lo_bin = k;
  th.hi_bin = k + 1;
  th.lo_w = 1.0 - frac;
  th.hi_w = frac;
  return th;
}

// Dense probability row for training targets.
template <typename S>
nn::Tensor<S> twohot_dense(const BinGrid& grid, double value) {
  nn::Tensor<S> out({grid.num_bins});
  const TwoHot th = twohot_encode(grid, value);
  out[th.lo_bin] += static_cast<S>(th.lo_w);
  out[th.hi_bin] += static_cast<S>(th.hi_w);
  return out;
}

// Expected value under a probability vector over the bins. All arithmetic in
// double so float32 probability rows still decode to tight tolerances.
template <typename S>
double twohot_decode(const BinGrid& grid, const nn::Tensor<S>& probs,
                     DecodeMode mode = DecodeMode::kSymlogMean) {
  util::require(probs.numel() == grid.num_bins, "probability row has ", probs.numel(),
                " entries for a ", grid.num_bins, "-bin grid");
  double acc = 0.0;
  for (nn::Index k = 0; k < grid.num_bins; ++k) {
    const double p = static_cast<double>(probs[k]);
    acc += p * (mode == DecodeMode::kSymlogMean ? grid.center_symlog(k) : grid.center_raw(k));
  }
  return mode == DecodeMode::kSymlogMean ? symexp(acc) : acc;
}

// Symlog bin centers as a tensor row, for expected-value decoding inside a
// computation graph.
template <typename S>
nn::Tensor<S> centers_symlog(const BinGrid& grid) {
  nn::Tensor<S> out({grid.num_bins});
  for (nn::Index k = 0; k < grid.num_bins; ++k) out[k] = static_cast<S>(grid.center_symlog(k));
  return out;
}

// Elementwise squash helpers for observation rows.
template <typename S>
nn::Tensor<S> symlog_tensor(const nn::Tensor<S>& x) {
  nn::Tensor<S> out(x.shape());
  for (nn::Index i = 0; i < x.numel(); ++i)
    out[i] = static_cast<S>(symlog(static_cast<double>(x[i])));
  return out;
}

template <typename S>
nn::Tensor<S> symexp_tensor(const nn::Tensor<S>& x) {
  nn::Tensor<S> out(x.shape());
  for (nn::Index i = 0; i < x.numel(); ++i)
    out[i] = static_cast<S>(symexp(static_cast<double>(x[i])));
  return out;
}

}  // namespace networld::codec
