#pragma once

#include <string>
#include <vector>

#include "networld/codec/symexp.hpp"
#include "networld/diffusion/unet.hpp"
#include "networld/nn/graph.hpp"
#include "networld/nn/layers.hpp"

namespace networld::guidance {

struct ClassifierConfig {
  nn::Index channels = 0;     // latent segment channels
  nn::Index base_width = 32;  // conv widths are base and 2*base
  nn::Index time_emb_dim = 32;
  nn::Index task_emb_dim = 16;
  nn::Index task_vocab = 16;
  nn::Index cond_hidden = 64;
  nn::Index hidden = 64;
  int groups = 8;
  codec::BinGrid bins = codec::BinGrid::make(65, -300.0, 300.0);
};

// Predicts the distribution of the discounted return of a noisy latent
// segment, conditioned on the diffusion step it was noised to. The head is
// zero-initialized, so an untrained classifier decodes to a constant return
// and contributes exactly zero steering gradient.
template <typename S>
class ReturnClassifier {
 public:
  ReturnClassifier() = default;

  ReturnClassifier(nn::ParamStore<S>& ps, const ClassifierConfig& cfg, util::Rng& rng,
                   const std::string& prefix = "clf")
      : cfg_(cfg) {
    util::require(cfg.channels > 0, "classifier channel count must be positive");
    util::require(cfg.base_width % cfg.groups == 0, "base width ", cfg.base_width,
                  " must be divisible by the ", cfg.groups, " norm groups");
    const nn::Index c1 = cfg.base_width, c2 = 2 * c1;
    task_emb_ = nn::Embedding<S>(ps, prefix + ".task_emb", cfg.task_vocab, cfg.task_emb_dim, rng);
    cond_ = nn::Dense<S>(ps, prefix + ".cond", cfg.time_emb_dim + cfg.task_emb_dim,
                         cfg.cond_hidden, rng);
    stem_ = nn::Conv1d<S>(ps, prefix + ".stem", cfg.channels, c1, 3, 1, 1, rng);
    res0_ = diffusion::ResBlock1d<S>(ps, prefix + ".res0", c1, c1, cfg.cond_hidden, cfg.groups, rng);
    pool_ = nn::Conv1d<S>(ps, prefix + ".pool", c1, c2, 3, 2, 1, rng);
    res1_ = diffusion::ResBlock1d<S>(ps, prefix + ".res1", c2, c2, cfg.cond_hidden, cfg.groups, rng);
    head1_ = nn::Dense<S>(ps, prefix + ".head1", c2, cfg.hidden, rng);
    head2_ = nn::Dense<S>(ps, prefix + ".head2", cfg.hidden, cfg.bins.num_bins, rng,
                          /*zero_init=*/true);
  }

  const ClassifierConfig& config() const { return cfg_; }

  // x: [B, channels, H] -> return-bin logits [B, num_bins].
  int logits(nn::Graph<S>& g, int x, const std::vector<int>& t_steps,
             const std::vector<int>& task_ids) const {
    const auto& xv = g.value(x);
    util::require(xv.ndim() == 3 && xv.size(1) == cfg_.channels, "classifier input must be [B,",
                  cfg_.channels, ",H], got ", nn::shape_str(xv.shape()));
    util::require(xv.size(0) == static_cast<nn::Index>(t_steps.size()) &&
                      t_steps.size() == task_ids.size(),
                  "conditioning batch size mismatch");
    const int sin = g.constant(nn::sinusoidal_embedding<S>(t_steps, cfg_.time_emb_dim));
    const int cond = g.silu(cond_.apply(g, g.concat_cols(sin, task_emb_.apply(g, task_ids))));
    int h = stem_.apply(g, x);
    h = res0_.apply(g, h, cond);
    h = pool_.apply(g, h);
    h = res1_.apply(g, h, cond);
    h = g.silu(head1_.apply(g, g.mean_time(h)));
    return head2_.apply(g, h);
  }

  // Mean cross-entropy against the two-hot encodings of the target returns.
  int loss(nn::Graph<S>& g, int x, const std::vector<int>& t_steps,
           const std::vector<int>& task_ids, const std::vector<double>& returns) const {
    util::require(returns.size() == t_steps.size(), "got ", returns.size(), " returns for ",
                  t_steps.size(), " samples");
    const nn::Index B = static_cast<nn::Index>(returns.size());
    nn::Tensor<S> target({B, cfg_.bins.num_bins});
    for (nn::Index b = 0; b < B; ++b) {
      const codec::TwoHot th = codec::twohot_encode(cfg_.bins, returns[static_cast<size_t>(b)]);
      target.at(b, th.lo_bin) += static_cast<S>(th.lo_w);
      target.at(b, th.hi_bin) += static_cast<S>(th.hi_w);
    }
    return g.mean_vec(g.softmax_xent_rows(logits(g, x, t_steps, task_ids), target));
  }

  // Expected return per sample, decoded from the bin distribution: [B].
  int predict(nn::Graph<S>& g, int x, const std::vector<int>& t_steps,
              const std::vector<int>& task_ids) const {
    const int probs = g.softmax_rows(logits(g, x, t_steps, task_ids));
    const int in_symlog = g.rowdot_const(probs, codec::centers_symlog<S>(cfg_.bins));
    return g.symexp_vec(in_symlog);
  }

 private:
  ClassifierConfig cfg_;
  nn::Embedding<S> task_emb_;
  nn::Dense<S> cond_;
  nn::Conv1d<S> stem_;
  diffusion::ResBlock1d<S> res0_, res1_;
  nn::Conv1d<S> pool_;
  nn::Dense<S> head1_, head2_;
};

// Gradient of the summed predicted returns with respect to the noisy segment,
// for steering the reverse diffusion toward high-return futures. The first
// time frame is the clamped current state, so its column is zeroed. A
// non-finite gradient is replaced by zeros (steering off for that step) and
// counted rather than propagated.
template <typename S>
nn::Tensor<S> return_gradient(const ReturnClassifier<S>& clf, const nn::Tensor<S>& x, int t,
                              const std::vector<int>& task_ids, long* nonfinite_count = nullptr) {
  nn::Graph<S> g;
  const int xin = g.leaf(x);
  const std::vector<int> t_steps(task_ids.size(), t);
  g.backward(g.sum_vec(clf.predict(g, xin, t_steps, task_ids)));
  nn::Tensor<S> grad = g.grad(xin);
  if (!grad.all_finite()) {
    if (nonfinite_count) ++*nonfinite_count;
    grad.fill(S(0));
    return grad;
  }
  const nn::Index B = x.size(0), C = x.size(1);
  for (nn::Index b = 0; b < B; ++b)
    for (nn::Index c = 0; c < C; ++c) grad.at(b, c, 0) = S(0);
  return grad;
}

}  // namespace networld::guidance
