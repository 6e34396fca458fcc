#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "networld/envs/env.hpp"
#include "networld/envs/task.hpp"
#include "networld/nn/tensor.hpp"

namespace networld::data {

// Offline experience for one task: float32 arrays over
//   obs [E, T+1, A, obs_dim]   (T+1 frames: one before each action + final)
//   act [E, T,   A, act_dim]
//   rew [E, T,   A]
//   adj [E, A, A]              (topology is fixed within an episode)
// plus the TaskSpec that produced it. On disk this is a directory holding
// manifest.txt and one raw little-endian blob per array.
struct TrajectoryStore {
  envs::TaskSpec spec;
  int num_episodes = 0;
  std::vector<float> obs, act, rew, adj;

  int frames() const { return spec.episode_len + 1; }

  float obs_at(int ep, int t, int agent, int d) const {
    return obs[idx4(ep, t, agent, d, frames(), spec.num_agents, spec.obs_dim())];
  }
  float act_at(int ep, int t, int agent, int d) const {
    return act[idx4(ep, t, agent, d, spec.episode_len, spec.num_agents, spec.action_dim())];
  }
  float rew_at(int ep, int t, int agent) const {
    return rew[(static_cast<size_t>(ep) * spec.episode_len + t) * spec.num_agents + agent];
  }
  float adj_at(int ep, int i, int j) const {
    return adj[(static_cast<size_t>(ep) * spec.num_agents + i) * spec.num_agents + j];
  }

  // [H, obs_dim] window of one agent's observations starting at frame start.
  nn::TensorF obs_window(int ep, int agent, int start, int horizon) const;

  // [H-1, act_dim] actions taken inside that window.
  nn::TensorF act_window(int ep, int agent, int start, int horizon) const;

  std::vector<int> neighbors(int ep, int agent) const;

  // Discounted reward suffix from frame start to the episode end.
  double return_to_go(int ep, int agent, int start, double gamma) const;

  // Shape and finiteness checks; throws on any violation.
  void validate() const;

  void save(const std::string& dir) const;
  static TrajectoryStore load(const std::string& dir);

 private:
  static size_t idx4(int a, int b, int c, int d, int nb, int nc, int nd) {
    return ((static_cast<size_t>(a) * nb + b) * nc + c) * nd + d;
  }
};

struct GenerateOptions {
  int num_episodes = 64;
  std::uint64_t seed = 0;
  int workers = 1;
  double explore_eps = 0.15;        // per agent-step chance of a random action
  double action_noise = 0.05;       // continuous jitter, fraction of the range
  double random_episode_frac = 0.1; // episodes driven entirely by random play
};

// Rolls out the scripted controller with exploration noise. Output is a pure
// function of (spec, options.seed); worker count only affects wall time.
TrajectoryStore generate(const envs::TaskSpec& spec, const GenerateOptions& opt);

// Discounted sum of a reward sequence.
double discounted_return(const std::vector<double>& rewards, double gamma);

}  // namespace networld::data
