#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace networld::cli {

struct GenDataOpts {
  std::string task;
  std::string out;
  std::string policy = "expert";  // expert (with exploration) or random
  int episodes = 16;
  int steps = 0;   // 0: the task's default episode length
  int agents = 0;  // 0: the task's default head count
  int workers = 1;
  double explore_eps = 0.15;
  double action_noise = 0.05;
  double random_frac = 0.1;
  std::uint64_t seed = 0;
};

struct PretrainOpts {
  std::vector<std::string> data;  // one dataset directory per task
  std::string out;
  std::string hold_out;  // task name excluded from training (its heads stay fresh)
  int epochs = 2;
  int steps_per_epoch = 100;
  int batch = 32;
  double lr = 3e-4;
  double clf_weight = 1.0;
  double recon_weight = 0.1;
  double invdyn_weight = 1.0;
  double gamma = 0.99;
  std::uint64_t seed = 0;
  // model shape
  int latent = 16;
  int horizon = 16;
  int unet_base = 32;
  int clf_base = 32;
  int diffusion_steps = 100;
  int return_bins = 65;
  int groups = 8;
};

struct FinetuneOpts {
  std::string model;  // checkpoint to start from
  std::string data;   // target-task dataset directory
  std::string task;
  std::string out;
  int epochs = 2;
  int steps_per_epoch = 100;
  int batch = 32;
  double lr = 3e-4;
  double core_lr_scale = 0.1;
  double clf_weight = 1.0;
  double recon_weight = 0.1;
  double invdyn_weight = 1.0;
  double gamma = 0.99;
  std::uint64_t seed = 0;
};

struct EvalOpts {
  std::string model;  // optional for expert/random
  std::string task;
  std::string out;
  std::string policy = "planner";
  std::string seeds = "1,2,3";  // comma-separated evaluation seeds
  int episodes_per_seed = 1;
  double guidance = 1.0;
  int replan = 1;
  int horizon = 0;  // 0: the model's trained horizon
  int agents = 0;   // 0: keep the task spec's head count
  int steps = 0;    // 0: keep the task spec's episode length
  std::uint64_t seed = 0;  // noise-stream salt
};

struct PlotOpts {
  std::vector<std::string> loss;     // training loss CSVs -> curves.png
  std::vector<std::string> metrics;  // evaluation CSVs -> ratio.png
  std::string out;
};

int run_gen_data(const GenDataOpts& o);
int run_pretrain(const PretrainOpts& o);
int run_finetune(const FinetuneOpts& o);
int run_eval(const EvalOpts& o);
int run_plot(const PlotOpts& o);

}  // namespace networld::cli
