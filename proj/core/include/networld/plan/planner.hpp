#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "networld/envs/env.hpp"
#include "networld/model/worldmodel.hpp"

namespace networld::plan {

struct PlannerConfig {
  double guidance_scale = 1.0;
  nn::Index horizon = 0;    // 0: use the model's trained horizon
  int replan_interval = 1;  // env steps served by one sampled segment
  std::uint64_t seed = 0;   // base key of the per-(agent, step) noise streams
};

struct PlanStats {
  std::int64_t decisions = 0;    // plan_step calls
  std::int64_t samples = 0;      // segments actually denoised
  std::int64_t fallbacks = 0;    // agent-steps served by the scripted controller
  long guidance_nonfinite = 0;   // steering gradients replaced by zero
};

// Receding-horizon controller for one task. Each decision encodes every
// agent's observation, denoises a guided latent segment per agent with the
// current state clamped as the first frame, and reads the action off the
// first predicted transition with the task's inverse-dynamics head. Agents
// share weights but consume independent noise streams keyed by
// (seed, agent, step), so an agent's draws never depend on who else is in
// the batch and its action depends only on its own 1-hop neighborhood.
class Planner {
 public:
  Planner(const model::WorldModelF& m, envs::TaskId task, const PlannerConfig& cfg);

  // obs [A, obs_dim], adj [A, A] -> actions [A, action_dim]. `step` stamps
  // the noise streams and drives segment reuse when replan_interval > 1
  // (within a window the cached plan is executed open loop). If sampling
  // diverges, the scripted controller acts for this step and the fallback
  // counter grows by A: a broken model degrades loudly instead of killing
  // the episode.
  nn::TensorF plan_step(const nn::TensorF& obs, const nn::TensorF& adj, std::int64_t step);

  // Drops the cached segment so the next plan_step resamples.
  void invalidate() { segment_step_ = -1; }

  const PlanStats& stats() const { return stats_; }
  nn::Index horizon() const { return horizon_; }

 private:
  bool resample(const nn::TensorF& obs, const nn::TensorF& adj, std::int64_t step);

  const model::WorldModelF& model_;
  envs::TaskId task_;
  PlannerConfig cfg_;
  nn::Index horizon_ = 0;
  PlanStats stats_;
  nn::TensorF segment_;             // [A, 2d+1, H] from the last resample
  std::int64_t segment_step_ = -1;  // env step of the segment's first frame
};

enum class Policy { kPlanner, kExpert, kRandom };

std::string policy_name(Policy p);
Policy policy_from_name(const std::string& name);

struct EpisodeSummary {
  int num_agents = 0;
  int steps = 0;
  std::vector<float> rewards;  // [steps * num_agents], step-major
  double mean_reward = 0.0;
  double ms_per_decision = 0.0;
  PlanStats stats;  // zeros for the expert and random policies
};

// Plays one episode: reset, then {decide -> env.step} for episode_len steps.
// `model` may be null unless the policy is kPlanner. The episode seed drives
// the environment and, mixed with cfg.seed, the planner's noise streams, so
// a (config, seed) pair pins the whole trajectory.
EpisodeSummary run_episode(const model::WorldModelF* model, const envs::TaskSpec& spec,
                           const PlannerConfig& cfg, Policy policy, std::uint64_t seed);

// step,agent,reward rows.
void write_episode_csv(const EpisodeSummary& s, const std::string& path);

struct EpisodeRow {
  std::uint64_t seed = 0;  // the outer evaluation seed, not the derived episode seed
  int episode = 0;
  double mean_reward = 0.0;
  std::int64_t fallbacks = 0;
};

struct EvalResult {
  std::vector<EpisodeRow> rows;  // one per (seed, episode), in run order
  std::vector<double> per_seed;  // mean episode reward for each seed
  double mean = 0.0;
  double stddev = 0.0;  // sample std over seeds; 0 for a single seed
  double ms_per_decision = 0.0;
  std::int64_t fallbacks = 0;
};

EvalResult evaluate(const model::WorldModelF* model, const envs::TaskSpec& spec,
                    const PlannerConfig& cfg, Policy policy,
                    const std::vector<std::uint64_t>& seeds, int episodes_per_seed);

}  // namespace networld::plan
