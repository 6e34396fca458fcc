#pragma once

#include <functional>
#include <vector>

#include "networld/diffusion/schedule.hpp"
#include "networld/nn/graph.hpp"
#include "networld/util/rng.hpp"

namespace networld::diffusion {

// Forward noising inside a graph: x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps,
// with a per-sample step t. noise must be standard normal of x0's shape.
template <typename S>
int q_sample(nn::Graph<S>& g, int x0, const NoiseSchedule& ns, const std::vector<int>& t,
             const nn::Tensor<S>& noise) {
  const auto& xv = g.value(x0);
  util::require(xv.size(0) == static_cast<nn::Index>(t.size()), "q_sample: ", t.size(),
                " steps for batch of ", xv.size(0));
  std::vector<S> a(t.size()), c(t.size());
  for (size_t b = 0; b < t.size(); ++b) {
    util::require(t[b] >= 1 && t[b] <= ns.steps, "diffusion step ", t[b], " outside [1, ", ns.steps, "]");
    const double ab = ns.alpha_bar_t(t[b]);
    a[b] = static_cast<S>(std::sqrt(ab));
    c[b] = static_cast<S>(std::sqrt(1.0 - ab));
  }
  return g.lincomb_per_sample(x0, noise, std::move(a), std::move(c));
}

// Denoiser forward pass as a plain function of values: [B,C,H] x, shared
// step t -> predicted noise [B,C,H].
template <typename S>
using EpsFn = std::function<nn::Tensor<S>(const nn::Tensor<S>&, int)>;

// Optional steering term evaluated at (x_t, t); must already be masked so the
// conditioning frame receives no push. Empty function disables steering.
template <typename S>
using GuidanceFn = std::function<nn::Tensor<S>(const nn::Tensor<S>&, int)>;

// One posterior update x_t -> x_{t-1} in place. guide may be null (steering
// off); noise must match x's shape and is consumed only when t > 1.
template <typename S>
void p_sample_inplace(const NoiseSchedule& ns, int t, nn::Tensor<S>& x, const nn::Tensor<S>& eps,
                      const nn::Tensor<S>* guide, double guidance_scale,
                      const nn::Tensor<S>* noise) {
  const double beta = ns.beta_t(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(ns.alpha_t(t));
  const double eps_coef = beta / std::sqrt(1.0 - ns.alpha_bar_t(t));
  const double sigma = ns.sigma_t(t);
  for (nn::Index i = 0; i < x.numel(); ++i) {
    double v = inv_sqrt_alpha * (static_cast<double>(x[i]) - eps_coef * static_cast<double>(eps[i]));
    if (guide) v += guidance_scale * beta * static_cast<double>((*guide)[i]);
    if (t > 1) v += sigma * static_cast<double>((*noise)[i]);
    x[i] = static_cast<S>(v);
  }
}

namespace detail {

template <typename S>
void clamp_first_frame(nn::Tensor<S>& x, const nn::Tensor<S>& cond) {
  for (nn::Index b = 0; b < x.size(0); ++b)
    for (nn::Index ch = 0; ch < x.size(1); ++ch) x.at(b, ch, 0) = cond.at(b, ch);
}

template <typename S, typename DrawFn>
nn::Tensor<S> reverse_loop(const NoiseSchedule& ns, const EpsFn<S>& eps_fn,
                           const GuidanceFn<S>& guidance_fn, double guidance_scale,
                           const nn::Tensor<S>& cond, nn::Tensor<S> x, const DrawFn& draw_noise) {
  clamp_first_frame(x, cond);
  nn::Tensor<S> noise(x.shape());
  for (int t = ns.steps; t >= 1; --t) {
    const nn::Tensor<S> eps = eps_fn(x, t);
    util::require(eps.same_shape(x), "noise prediction shape mismatch");

    nn::Tensor<S> guide;
    const bool steer = guidance_fn && guidance_scale != 0.0;
    if (steer) {
      guide = guidance_fn(x, t);
      util::require(guide.same_shape(x), "guidance shape mismatch");
    }
    if (t > 1) draw_noise(noise);
    p_sample_inplace(ns, t, x, eps, steer ? &guide : nullptr, guidance_scale,
                     t > 1 ? &noise : nullptr);
    clamp_first_frame(x, cond);
    util::require(x.all_finite(), "sampling diverged at step ", t,
                  "; check guidance scale and schedule");
  }
  clamp_first_frame(x, cond);
  return x;
}

}  // namespace detail

// Reverse diffusion for a batch of latent segments with the first time frame
// clamped to `cond` [B, C] throughout (it is the known current state, not a
// prediction). Returns x0 estimates [B, C, H].
template <typename S>
nn::Tensor<S> sample_segment(const NoiseSchedule& ns, const EpsFn<S>& eps_fn,
                             const GuidanceFn<S>& guidance_fn, double guidance_scale,
                             const nn::Tensor<S>& cond, nn::Index horizon, util::Rng& rng) {
  util::require(cond.ndim() == 2, "condition must be [B, C], got ", nn::shape_str(cond.shape()));
  const nn::Index B = cond.size(0), C = cond.size(1);
  util::require(horizon >= 2, "horizon must be at least 2, got ", horizon);

  nn::Tensor<S> x({B, C, horizon});
  for (nn::Index i = 0; i < x.numel(); ++i) x[i] = static_cast<S>(rng.normal());
  auto draw = [&rng](nn::Tensor<S>& n) {
    for (nn::Index i = 0; i < n.numel(); ++i) n[i] = static_cast<S>(rng.normal());
  };
  return detail::reverse_loop(ns, eps_fn, guidance_fn, guidance_scale, cond, std::move(x), draw);
}

// Same reverse process, but sample b draws all of its noise from rngs[b] (in
// flat channel-time order, first frame included even though it is clamped).
// A row's draws never depend on who else shares the batch, so batched and
// one-at-a-time planning agree bit for bit as long as eps_fn and guidance_fn
// treat rows independently.
template <typename S>
nn::Tensor<S> sample_segment_streams(const NoiseSchedule& ns, const EpsFn<S>& eps_fn,
                                     const GuidanceFn<S>& guidance_fn, double guidance_scale,
                                     const nn::Tensor<S>& cond, nn::Index horizon,
                                     std::vector<util::Rng>& rngs) {
  util::require(cond.ndim() == 2, "condition must be [B, C], got ", nn::shape_str(cond.shape()));
  const nn::Index B = cond.size(0), C = cond.size(1);
  util::require(horizon >= 2, "horizon must be at least 2, got ", horizon);
  util::require(static_cast<nn::Index>(rngs.size()) == B, "got ", rngs.size(),
                " noise streams for batch of ", B);

  const nn::Index row = C * horizon;
  auto draw = [&](nn::Tensor<S>& n) {
    for (nn::Index b = 0; b < B; ++b)
      for (nn::Index i = 0; i < row; ++i) n[b * row + i] = static_cast<S>(rngs[b].normal());
  };
  nn::Tensor<S> x({B, C, horizon});
  draw(x);
  return detail::reverse_loop(ns, eps_fn, guidance_fn, guidance_scale, cond, std::move(x), draw);
}

}  // namespace networld::diffusion
