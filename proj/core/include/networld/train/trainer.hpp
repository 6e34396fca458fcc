#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "networld/data/trajectory.hpp"
#include "networld/model/worldmodel.hpp"
#include "networld/nn/adam.hpp"

namespace networld::train {

struct TrainConfig {
  int batch_size = 32;       // latent segments per optimization step
  int epochs = 2;
  int steps_per_epoch = 100;
  double lr = 3e-4;
  double recon_weight = 0.1;
  double clf_weight = 1.0;
  double invdyn_weight = 1.0;
  double gamma = 0.99;        // discount for the classifier's return targets
  double core_lr_scale = 0.1; // shared-trunk rate multiplier during adaptation
  std::uint64_t seed = 0;
  std::string out_dir;        // when set: loss.csv + per-epoch checkpoints
};

struct StepStats {
  double total = 0, diffusion = 0, classifier = 0, recon = 0, invdyn = 0;
  envs::TaskId task = envs::TaskId::kBeamforming;
  bool applied = false;  // false when the step was skipped on non-finite grads
};

struct RunReport {
  std::vector<StepStats> steps;
  std::int64_t skipped = 0;

  // Mean total loss over the first/last `window` steps, for trend checks.
  double mean_head(size_t window) const;
  double mean_tail(size_t window) const;
};

// Joint offline training of the world model: denoising score matching on
// latent segments, return classification on the same noisy segments,
// observation reconstruction, and inverse dynamics — one Adam step per batch.
// Batches are single-task; tasks with data round-robin across steps.
class Trainer {
 public:
  Trainer(model::WorldModel<float>& m, const TrainConfig& cfg);

  // The store's task must be one the model was built for. The pointer must
  // outlive the trainer.
  void add_data(const data::TrajectoryStore* store);

  // One optimization step on the next task in the rotation.
  StepStats step();

  // epochs * steps_per_epoch steps over all added tasks, every parameter at
  // the base rate. Writes loss.csv and per-epoch checkpoints if configured.
  RunReport pretrain();

  // Same loop, but only the target task's encoder and inverse-dynamics head
  // train at the base rate; the shared trunk and every other task crawl at
  // core_lr_scale. Call with the target task's data added.
  RunReport finetune(envs::TaskId target);

  std::int64_t skipped_steps() const { return adam_.skipped_steps(); }

 private:
  StepStats joint_step(const data::TrajectoryStore& ds);
  RunReport run(const std::string& tag);
  void rebuild_optimizer(const envs::TaskId* target);

  model::WorldModel<float>& model_;
  TrainConfig cfg_;
  std::vector<const data::TrajectoryStore*> data_;
  nn::Adam<float> adam_;
  util::Rng rng_;
  std::size_t next_task_ = 0;
  std::int64_t global_step_ = 0;
};

}  // namespace networld::train
