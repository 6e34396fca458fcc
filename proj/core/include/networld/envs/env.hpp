#pragma once

#include <cstdint>
#include <vector>

#include "networld/envs/task.hpp"
#include "networld/nn/tensor.hpp"
#include "networld/util/rng.hpp"

namespace networld::envs {

// Complete world state for one episode. Every per-agent quantity, including
// the noise-stream keys, lives in indexed vectors, so relabeling agents is a
// pure permutation of this struct: stepping a permuted state with permuted
// actions gives permuted observations and rewards.
struct EnvState {
  TaskId task = TaskId::kBeamforming;
  int num_agents = 0;
  std::int64_t step_count = 0;

  std::vector<std::uint64_t> agent_keys;  // [A] noise-stream identities
  std::vector<std::uint64_t> pair_keys;   // [A*A] (beamforming fading)
  std::vector<std::uint8_t> adj;          // [A*A] symmetric 0/1, zero diagonal

  // beamforming
  std::vector<double> chan;           // [A*A*2], chan[(i*A+j)*2+c] = h_ij
  std::vector<double> last_rate;      // [A]
  std::vector<double> last_caused;    // [A]
  std::vector<double> last_incoming;  // [A]
  std::vector<double> last_power;     // [A]

  // scheduling
  std::vector<double> queue;          // [A]
  std::vector<double> last_arrivals;  // [A]
  std::vector<double> last_grant;     // [A]

  // slicing
  std::vector<double> log_demand;   // [A]
  std::vector<double> demand;       // [A] (clamped exp of log_demand)
  std::vector<double> prev_demand;  // [A]
  std::vector<double> served_prev;  // [A]
  std::vector<double> last_share;   // [A]
};

// Dec-POMDP-style stepper for one TaskSpec. Stateless itself: the entire
// trajectory state is in EnvState, so cloned states evolve identically.
class Env {
 public:
  explicit Env(TaskSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const TaskSpec& spec() const { return spec_; }

  EnvState reset(std::uint64_t seed) const;

  // Current per-agent observation rows, [A, obs_dim].
  nn::TensorF obs(const EnvState& s) const;

  // Applies one joint action [A, action_dim]; returns per-agent rewards and
  // advances the state. Out-of-range actions are clamped, never rejected.
  std::vector<float> step(EnvState& s, const nn::TensorF& actions) const;

  // 1-hop communication graph, [A, A] with {0,1} entries.
  nn::TensorF adjacency(const EnvState& s) const;

 private:
  TaskSpec spec_;

  void reset_beamforming(EnvState& s, std::uint64_t seed) const;
  void reset_scheduling(EnvState& s, std::uint64_t seed) const;
  void reset_slicing(EnvState& s, std::uint64_t seed) const;

  std::vector<float> step_beamforming(EnvState& s, const nn::TensorF& actions) const;
  std::vector<float> step_scheduling(EnvState& s, const nn::TensorF& actions) const;
  std::vector<float> step_slicing(EnvState& s, const nn::TensorF& actions) const;
};

// Scripted per-task controller; a memoryless function of each agent's own
// current observation row, which is what makes its actions recoverable from
// observation sequences.
nn::TensorF expert_actions(const TaskSpec& spec, const nn::TensorF& obs);

// Uniform draw over the action space (scheduling: integer blocks).
nn::TensorF random_actions(const TaskSpec& spec, util::Rng& rng);

// Relabels agents: new agent i is old agent perm[i]. perm must be a
// permutation of 0..A-1.
EnvState permuted(const EnvState& s, const std::vector<int>& perm);

}  // namespace networld::envs
