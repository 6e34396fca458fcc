#pragma once

#include <string>
#include <vector>

#include "networld/nn/graph.hpp"
#include "networld/nn/layers.hpp"

namespace networld::diffusion {

// Residual 1-D convolution block with a conditioning bias injected between
// its two convolutions. Shared by the denoiser and the return classifier.
template <typename S>
struct ResBlock1d {
  nn::Conv1d<S> conv1, conv2;
  nn::GroupNorm<S> gn1, gn2;
  nn::Dense<S> emb;
  nn::Conv1d<S> skip;
  bool project_skip = false;

  ResBlock1d() = default;

  ResBlock1d(nn::ParamStore<S>& ps, const std::string& name, nn::Index in_ch, nn::Index out_ch,
             nn::Index cond_dim, int groups, util::Rng& rng) {
    conv1 = nn::Conv1d<S>(ps, name + ".conv1", in_ch, out_ch, 3, 1, 1, rng);
    gn1 = nn::GroupNorm<S>(ps, name + ".gn1", out_ch, groups, rng);
    emb = nn::Dense<S>(ps, name + ".emb", cond_dim, out_ch, rng);
    conv2 = nn::Conv1d<S>(ps, name + ".conv2", out_ch, out_ch, 3, 1, 1, rng);
    gn2 = nn::GroupNorm<S>(ps, name + ".gn2", out_ch, groups, rng);
    project_skip = in_ch != out_ch;
    if (project_skip) skip = nn::Conv1d<S>(ps, name + ".skip", in_ch, out_ch, 1, 1, 0, rng);
  }

  int apply(nn::Graph<S>& g, int x, int cond) const {
    int h = g.silu(gn1.apply(g, conv1.apply(g, x)));
    h = g.add_chan_embed(h, emb.apply(g, cond));
    h = g.silu(gn2.apply(g, conv2.apply(g, h)));
    return g.add(h, project_skip ? skip.apply(g, x) : x);
  }
};

struct UNetConfig {
  nn::Index channels = 0;      // input/output channels
  nn::Index base_width = 32;   // level widths are base * {1,2,3,4}
  nn::Index time_emb_dim = 32;
  nn::Index task_emb_dim = 16;
  nn::Index task_vocab = 16;
  nn::Index cond_hidden = 64;
  int groups = 8;
};

// Temporal U-Net noise predictor over [B, C, H] latent segments: a 4-level
// encoder/decoder over the time axis (8x downsampling in the middle) with
// skip connections, conditioned on the diffusion step and a learned task
// embedding. The output head is zero-initialized so the initial prediction
// is exactly zero.
template <typename S>
class TemporalUNet {
 public:
  TemporalUNet() = default;

  TemporalUNet(nn::ParamStore<S>& ps, const UNetConfig& cfg, util::Rng& rng,
               const std::string& prefix = "unet")
      : cfg_(cfg) {
    util::require(cfg.channels > 0, "unet channel count must be positive");
    util::require(cfg.base_width % cfg.groups == 0, "base width ", cfg.base_width,
                  " must be divisible by the ", cfg.groups, " norm groups");
    const nn::Index c1 = cfg.base_width, c2 = 2 * c1, c3 = 3 * c1, c4 = 4 * c1;
    const nn::Index cond_in = cfg.time_emb_dim + cfg.task_emb_dim;

    task_emb_ = nn::Embedding<S>(ps, prefix + ".task_emb", cfg.task_vocab, cfg.task_emb_dim, rng);
    cond_ = nn::Dense<S>(ps, prefix + ".cond", cond_in, cfg.cond_hidden, rng);

    stem_ = nn::Conv1d<S>(ps, prefix + ".stem", cfg.channels, c1, 3, 1, 1, rng);
    res_[0] = ResBlock1d<S>(ps, prefix + ".down0", c1, c1, cfg.cond_hidden, cfg.groups, rng);
    down_[0] = nn::Conv1d<S>(ps, prefix + ".pool0", c1, c2, 3, 2, 1, rng);
    res_[1] = ResBlock1d<S>(ps, prefix + ".down1", c2, c2, cfg.cond_hidden, cfg.groups, rng);
    down_[1] = nn::Conv1d<S>(ps, prefix + ".pool1", c2, c3, 3, 2, 1, rng);
    res_[2] = ResBlock1d<S>(ps, prefix + ".down2", c3, c3, cfg.cond_hidden, cfg.groups, rng);
    down_[2] = nn::Conv1d<S>(ps, prefix + ".pool2", c3, c4, 3, 2, 1, rng);
    res_[3] = ResBlock1d<S>(ps, prefix + ".mid0", c4, c4, cfg.cond_hidden, cfg.groups, rng);
    res_[4] = ResBlock1d<S>(ps, prefix + ".mid1", c4, c4, cfg.cond_hidden, cfg.groups, rng);
    up_[0] = nn::ConvT1d<S>(ps, prefix + ".lift2", c4, c3, 4, 2, 1, rng);
    res_[5] = ResBlock1d<S>(ps, prefix + ".up2", 2 * c3, c3, cfg.cond_hidden, cfg.groups, rng);
    up_[1] = nn::ConvT1d<S>(ps, prefix + ".lift1", c3, c2, 4, 2, 1, rng);
    res_[6] = ResBlock1d<S>(ps, prefix + ".up1", 2 * c2, c2, cfg.cond_hidden, cfg.groups, rng);
    up_[2] = nn::ConvT1d<S>(ps, prefix + ".lift0", c2, c1, 4, 2, 1, rng);
    res_[7] = ResBlock1d<S>(ps, prefix + ".up0", 2 * c1, c1, cfg.cond_hidden, cfg.groups, rng);
    head_gn_ = nn::GroupNorm<S>(ps, prefix + ".head_gn", c1, cfg.groups, rng);
    head_ = nn::Conv1d<S>(ps, prefix + ".head", c1, cfg.channels, 3, 1, 1, rng, /*zero_init=*/true);
  }

  const UNetConfig& config() const { return cfg_; }

  // Conditioning vector for a batch: sinusoidal step code + task embedding.
  int condition(nn::Graph<S>& g, const std::vector<int>& t_steps,
                const std::vector<int>& task_ids) const {
    util::require(t_steps.size() == task_ids.size(), "conditioning batch size mismatch");
    const int sin = g.constant(nn::sinusoidal_embedding<S>(t_steps, cfg_.time_emb_dim));
    const int cat = g.concat_cols(sin, task_emb_.apply(g, task_ids));
    return g.silu(cond_.apply(g, cat));
  }

  // x: [B, channels, H] -> predicted noise of the same shape. H is padded by
  // edge replication to a multiple of 8 internally.
  int apply(nn::Graph<S>& g, int x, const std::vector<int>& t_steps,
            const std::vector<int>& task_ids) const {
    const auto& xv = g.value(x);
    util::require(xv.ndim() == 3 && xv.size(1) == cfg_.channels, "unet input must be [B,",
                  cfg_.channels, ",H], got ", nn::shape_str(xv.shape()));
    util::require(xv.size(0) == static_cast<nn::Index>(t_steps.size()),
                  "batch has ", xv.size(0), " samples but ", t_steps.size(), " timesteps");
    const nn::Index L = xv.size(2);
    const nn::Index Lp = ((L + 7) / 8) * 8;

    const int cond = condition(g, t_steps, task_ids);
    int h = stem_.apply(g, g.pad_time_edge(x, Lp));
    const int s0 = res_[0].apply(g, h, cond);
    h = down_[0].apply(g, s0);
    const int s1 = res_[1].apply(g, h, cond);
    h = down_[1].apply(g, s1);
    const int s2 = res_[2].apply(g, h, cond);
    h = down_[2].apply(g, s2);
    h = res_[3].apply(g, h, cond);
    h = res_[4].apply(g, h, cond);
    h = res_[5].apply(g, g.concat_chan(up_[0].apply(g, h), s2), cond);
    h = res_[6].apply(g, g.concat_chan(up_[1].apply(g, h), s1), cond);
    h = res_[7].apply(g, g.concat_chan(up_[2].apply(g, h), s0), cond);
    h = head_.apply(g, g.silu(head_gn_.apply(g, h)));
    return g.crop_time(h, L);
  }

 private:
  UNetConfig cfg_;
  nn::Embedding<S> task_emb_;
  nn::Dense<S> cond_;
  nn::Conv1d<S> stem_;
  ResBlock1d<S> res_[8];
  nn::Conv1d<S> down_[3];
  nn::ConvT1d<S> up_[3];
  nn::GroupNorm<S> head_gn_;
  nn::Conv1d<S> head_;
};

}  // namespace networld::diffusion
