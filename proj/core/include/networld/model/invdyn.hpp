#pragma once

#include <cmath>
#include <string>

#include "networld/nn/graph.hpp"
#include "networld/nn/layers.hpp"

namespace networld::model {

struct InvDynConfig {
  nn::Index latent_dim = 0;
  nn::Index action_dim = 0;
  nn::Index hidden = 64;
  bool discrete = false;
  double action_lo = 0.0;
  double action_hi = 1.0;
};

// Recovers the action that links two consecutive local latent frames. Inputs
// are always passed through stopgrad, so this head never shapes the
// representation it reads.
template <typename S>
class InverseDynamics {
 public:
  InverseDynamics() = default;

  InverseDynamics(nn::ParamStore<S>& ps, const InvDynConfig& cfg, util::Rng& rng,
                  const std::string& prefix)
      : cfg_(cfg) {
    util::require(cfg.latent_dim > 0 && cfg.action_dim > 0, "invdyn dims must be positive");
    util::require(cfg.action_lo < cfg.action_hi, "action range [", cfg.action_lo, ", ",
                  cfg.action_hi, "] is empty");
    l1_ = nn::Dense<S>(ps, prefix + ".l1", 2 * cfg.latent_dim, cfg.hidden, rng);
    l2_ = nn::Dense<S>(ps, prefix + ".l2", cfg.hidden, cfg.hidden, rng);
    l3_ = nn::Dense<S>(ps, prefix + ".l3", cfg.hidden, cfg.action_dim, rng);
  }

  const InvDynConfig& config() const { return cfg_; }

  // pairs: [B, 2*latent_dim] (frame k and frame k+1 side by side) -> [B, action_dim].
  int apply(nn::Graph<S>& g, int pairs) const {
    const auto& pv = g.value(pairs);
    util::require(pv.ndim() == 2 && pv.size(1) == 2 * cfg_.latent_dim,
                  "invdyn input must be [B,", 2 * cfg_.latent_dim, "], got ",
                  nn::shape_str(pv.shape()));
    int h = g.silu(l1_.apply(g, g.stopgrad(pairs)));
    h = g.silu(l2_.apply(g, h));
    return l3_.apply(g, h);
  }

  int loss(nn::Graph<S>& g, int pairs, const nn::Tensor<S>& actions) const {
    return g.mse(apply(g, pairs), actions);
  }

  // Value-level inference with snapping to the action space: integers are
  // rounded, everything is clamped into [lo, hi].
  nn::Tensor<S> infer(const nn::Tensor<S>& pairs) const {
    nn::Graph<S> g;
    nn::Tensor<S> out = g.value(apply(g, g.constant(pairs)));
    for (nn::Index i = 0; i < out.numel(); ++i) {
      double a = static_cast<double>(out[i]);
      if (cfg_.discrete) a = std::round(a);
      out[i] = static_cast<S>(std::min(cfg_.action_hi, std::max(cfg_.action_lo, a)));
    }
    return out;
  }

 private:
  InvDynConfig cfg_;
  nn::Dense<S> l1_, l2_, l3_;
};

}  // namespace networld::model
