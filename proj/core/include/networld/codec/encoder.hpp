#pragma once

#include <string>
#include <vector>

#include "networld/codec/symexp.hpp"
#include "networld/nn/graph.hpp"
#include "networld/nn/layers.hpp"

namespace networld::codec {

struct EncoderConfig {
  nn::Index obs_dim = 0;
  nn::Index latent_dim = 0;
  nn::Index hidden = 64;
};

// Per-frame observation encoder: a small MLP from symlog-squashed observation
// rows to latent rows, plus a linear reconstruction head used as an auxiliary
// training signal. Rows are independent; neighbors enter later via averaging.
template <typename S>
class ScenarioEncoder {
 public:
  ScenarioEncoder() = default;

  ScenarioEncoder(nn::ParamStore<S>& ps, const EncoderConfig& cfg, util::Rng& rng,
                  const std::string& prefix = "enc") : cfg_(cfg) {
    util::require(cfg.obs_dim > 0 && cfg.latent_dim > 0, "encoder dims must be positive");
    e1_ = nn::Dense<S>(ps, prefix + ".l1", cfg.obs_dim, cfg.hidden, rng);
    e2_ = nn::Dense<S>(ps, prefix + ".l2", cfg.hidden, cfg.hidden, rng);
    e3_ = nn::Dense<S>(ps, prefix + ".l3", cfg.hidden, cfg.latent_dim, rng);
    d1_ = nn::Dense<S>(ps, prefix + ".recon1", cfg.latent_dim, cfg.hidden, rng);
    d2_ = nn::Dense<S>(ps, prefix + ".recon2", cfg.hidden, cfg.obs_dim, rng);
  }

  const EncoderConfig& config() const { return cfg_; }

  // obs_rows: [R, obs_dim] already in symlog space -> [R, latent_dim]
  int encode(nn::Graph<S>& g, int obs_rows) const {
    int h = g.silu(e1_.apply(g, obs_rows));
    h = g.silu(e2_.apply(g, h));
    return e3_.apply(g, h);
  }

  // latent rows -> reconstructed symlog observations
  int reconstruct(nn::Graph<S>& g, int latent_rows) const {
    return d2_.apply(g, g.silu(d1_.apply(g, latent_rows)));
  }

  // Forward-only convenience for deployment paths. Input raw observation
  // rows; squashing happens here.
  nn::Tensor<S> encode_raw(const nn::Tensor<S>& raw_obs_rows) const {
    nn::Graph<S> g;
    const int out = encode(g, g.constant(symlog_tensor(raw_obs_rows)));
    return g.value(out);
  }

 private:
  EncoderConfig cfg_;
  nn::Dense<S> e1_, e2_, e3_, d1_, d2_;
};

// Mean-field neighborhood summary: elementwise mean of neighbor latent rows.
// An empty neighborhood yields the zero vector; callers carry a separate
// presence flag so downstream layers can tell "no neighbors" from "neighbors
// averaging to zero".
template <typename S>
nn::Tensor<S> mf_aggregate(const std::vector<nn::Tensor<S>>& neighbor_latents, nn::Index dim) {
  nn::Tensor<S> out({dim});
  if (neighbor_latents.empty()) return out;
  for (const auto& z : neighbor_latents) {
    util::require(z.numel() == dim, "neighbor latent has ", z.numel(), " dims, expected ", dim);
    for (nn::Index i = 0; i < dim; ++i) out[i] += z[i];
  }
  const S inv = S(1) / static_cast<S>(neighbor_latents.size());
  for (nn::Index i = 0; i < dim; ++i) out[i] *= inv;
  return out;
}

}  // namespace networld::codec
