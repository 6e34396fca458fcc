#pragma once

#include <cmath>
#include <vector>

#include "networld/util/require.hpp"

namespace networld::diffusion {

// Linear-beta denoising schedule. Steps are 1-based: step t uses beta[t-1].
// alpha_bar is the cumulative signal fraction; the constructor rejects
// schedules that leave more than 5% of the signal at the final step, since
// sampling starts from pure noise and such a schedule can never reach it.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  static NoiseSchedule make(int steps, double beta_lo = 1e-3, double beta_hi = 0.2) {
    util::require(steps >= 2, "schedule needs at least 2 steps, got ", steps);
    util::require(beta_lo > 0.0 && beta_lo <= beta_hi && beta_hi < 1.0,
                  "betas must satisfy 0 < lo <= hi < 1, got [", beta_lo, ", ", beta_hi, "]");
    NoiseSchedule ns;
    ns.steps = steps;
    ns.beta.resize(static_cast<size_t>(steps));
    ns.alpha.resize(static_cast<size_t>(steps));
    ns.alpha_bar.resize(static_cast<size_t>(steps));
    double prod = 1.0;
    for (int t = 0; t < steps; ++t) {
      const double b = beta_lo + (beta_hi - beta_lo) * static_cast<double>(t) /
                                     static_cast<double>(steps - 1);
      ns.beta[static_cast<size_t>(t)] = b;
      ns.alpha[static_cast<size_t>(t)] = 1.0 - b;
      prod *= 1.0 - b;
      ns.alpha_bar[static_cast<size_t>(t)] = prod;
    }
    for (int t = 1; t < steps; ++t)
      util::require(ns.alpha_bar[static_cast<size_t>(t)] < ns.alpha_bar[static_cast<size_t>(t - 1)],
                    "signal fraction must decrease strictly");
    util::require(prod > 0.0 && prod < 0.05, "final signal fraction ", prod,
                  " is too high; increase steps or widen the beta range");
    return ns;
  }

  double beta_t(int t) const { return beta[static_cast<size_t>(t - 1)]; }
  double alpha_t(int t) const { return alpha[static_cast<size_t>(t - 1)]; }
  double alpha_bar_t(int t) const { return alpha_bar[static_cast<size_t>(t - 1)]; }
  double sigma_t(int t) const { return std::sqrt(beta_t(t)); }
};

}  // namespace networld::diffusion
