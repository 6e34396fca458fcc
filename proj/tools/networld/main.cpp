#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "networld/util/kv.hpp"

namespace {

using networld::util::KvDoc;

KvDoc load_config(const std::string& path) {
  if (path.empty()) return {};
  return KvDoc::load(path);
}

// Precedence: explicit flag > config file > built-in default. Seeds fall back
// to NETWORLD_SEED before the built-in zero.
void merge(const CLI::App& cmd, const KvDoc& cfg, const char* flag, const char* key, int& v) {
  if (cmd.count(flag) == 0 && cfg.has(key)) v = static_cast<int>(cfg.get_int(key));
}
void merge(const CLI::App& cmd, const KvDoc& cfg, const char* flag, const char* key, double& v) {
  if (cmd.count(flag) == 0 && cfg.has(key)) v = cfg.get_double(key);
}
void merge(const CLI::App& cmd, const KvDoc& cfg, const char* flag, const char* key,
           std::string& v) {
  if (cmd.count(flag) == 0 && cfg.has(key)) v = cfg.get_string(key);
}
void merge_seed(const CLI::App& cmd, const KvDoc& cfg, std::uint64_t& v) {
  if (cmd.count("--seed") > 0) return;
  if (cfg.has("seed")) {
    v = cfg.get_uint("seed");
    return;
  }
  if (const char* env = std::getenv("NETWORLD_SEED")) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') v = parsed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline diffusion world model for multi-agent radio control"};
  app.require_subcommand(1);

  networld::cli::GenDataOpts gd;
  std::string gd_config;
  CLI::App* gen = app.add_subcommand("gen-data", "roll out scripted episodes into a dataset");
  gen->add_option("--task", gd.task, "cbf, rb, or ns")->required();
  gen->add_option("--out", gd.out, "dataset directory to create")->required();
  gen->add_option("--policy", gd.policy, "expert or random");
  gen->add_option("--episodes", gd.episodes, "episode count");
  gen->add_option("--steps", gd.steps, "episode length (0: task default)");
  gen->add_option("--agents", gd.agents, "agent count (0: task default)");
  gen->add_option("--workers", gd.workers, "rollout worker threads");
  gen->add_option("--explore-eps", gd.explore_eps, "random-action probability");
  gen->add_option("--action-noise", gd.action_noise, "continuous action jitter");
  gen->add_option("--random-frac", gd.random_frac, "fraction of fully random episodes");
  gen->add_option("--seed", gd.seed, "generation seed");
  gen->add_option("--config", gd_config, "key=value config file (flags win)");

  networld::cli::PretrainOpts pt;
  std::string pt_config;
  CLI::App* pre = app.add_subcommand("pretrain", "train a world model from scratch");
  pre->add_option("--data", pt.data, "dataset directories, one per task")->required();
  pre->add_option("--out", pt.out, "run directory for checkpoints and loss.csv")->required();
  pre->add_option("--hold-out", pt.hold_out, "task name kept out of training");
  pre->add_option("--epochs", pt.epochs, "training epochs");
  pre->add_option("--steps-per-epoch", pt.steps_per_epoch, "optimization steps per epoch");
  pre->add_option("--batch", pt.batch, "segments per step");
  pre->add_option("--lr", pt.lr, "Adam learning rate");
  pre->add_option("--clf-weight", pt.clf_weight, "return-classifier loss weight");
  pre->add_option("--recon-weight", pt.recon_weight, "reconstruction loss weight");
  pre->add_option("--invdyn-weight", pt.invdyn_weight, "inverse-dynamics loss weight");
  pre->add_option("--gamma", pt.gamma, "return discount");
  pre->add_option("--latent", pt.latent, "latent channels per agent");
  pre->add_option("--horizon", pt.horizon, "segment length in steps");
  pre->add_option("--unet-base", pt.unet_base, "denoiser base width");
  pre->add_option("--clf-base", pt.clf_base, "classifier base width");
  pre->add_option("--diffusion-steps", pt.diffusion_steps, "noise schedule length");
  pre->add_option("--return-bins", pt.return_bins, "classifier output bins");
  pre->add_option("--groups", pt.groups, "group-norm groups");
  pre->add_option("--seed", pt.seed, "training seed");
  pre->add_option("--config", pt_config, "key=value config file (flags win)");

  networld::cli::FinetuneOpts ft;
  std::string ft_config;
  CLI::App* fin = app.add_subcommand("finetune", "adapt a checkpoint to one task");
  fin->add_option("--model", ft.model, "checkpoint to start from")->required();
  fin->add_option("--data", ft.data, "target-task dataset directory")->required();
  fin->add_option("--task", ft.task, "target task name")->required();
  fin->add_option("--out", ft.out, "run directory")->required();
  fin->add_option("--epochs", ft.epochs, "training epochs");
  fin->add_option("--steps-per-epoch", ft.steps_per_epoch, "optimization steps per epoch");
  fin->add_option("--batch", ft.batch, "segments per step");
  fin->add_option("--lr", ft.lr, "Adam learning rate for the target heads");
  fin->add_option("--core-lr-scale", ft.core_lr_scale, "trunk rate multiplier");
  fin->add_option("--clf-weight", ft.clf_weight, "return-classifier loss weight");
  fin->add_option("--recon-weight", ft.recon_weight, "reconstruction loss weight");
  fin->add_option("--invdyn-weight", ft.invdyn_weight, "inverse-dynamics loss weight");
  fin->add_option("--gamma", ft.gamma, "return discount");
  fin->add_option("--seed", ft.seed, "training seed");
  fin->add_option("--config", ft_config, "key=value config file (flags win)");

  networld::cli::EvalOpts ev;
  std::string ev_config;
  CLI::App* evl = app.add_subcommand("eval", "run scored episodes and write metrics.csv");
  evl->add_option("--task", ev.task, "cbf, rb, or ns")->required();
  evl->add_option("--out", ev.out, "run directory")->required();
  evl->add_option("--model", ev.model, "checkpoint (required for --policy planner)");
  evl->add_option("--policy", ev.policy, "planner, expert, or random");
  evl->add_option("--seeds", ev.seeds, "comma-separated environment seeds");
  evl->add_option("--episodes-per-seed", ev.episodes_per_seed, "episodes per seed");
  evl->add_option("--guidance", ev.guidance, "return-steering strength");
  evl->add_option("--replan", ev.replan, "steps served per sampled segment");
  evl->add_option("--horizon", ev.horizon, "plan length (0: model's horizon)");
  evl->add_option("--agents", ev.agents, "agent count (0: task default)");
  evl->add_option("--steps", ev.steps, "episode length (0: task default)");
  evl->add_option("--seed", ev.seed, "noise-stream salt");
  evl->add_option("--config", ev_config, "key=value config file (flags win)");

  networld::cli::PlotOpts pl;
  CLI::App* plot = app.add_subcommand("plot", "render loss curves and reward bars as PNGs");
  plot->add_option("--loss", pl.loss, "loss.csv files -> curves.png");
  plot->add_option("--metrics", pl.metrics, "metrics.csv files -> ratio.png");
  plot->add_option("--out", pl.out, "directory for the images")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return 2;  // bad usage: unknown flag, missing required option, extra args
  }

  try {
    if (gen->parsed()) {
      const KvDoc cfg = load_config(gd_config);
      merge(*gen, cfg, "--task", "task", gd.task);
      merge(*gen, cfg, "--policy", "policy", gd.policy);
      merge(*gen, cfg, "--episodes", "episodes", gd.episodes);
      merge(*gen, cfg, "--steps", "steps", gd.steps);
      merge(*gen, cfg, "--agents", "agents", gd.agents);
      merge(*gen, cfg, "--workers", "workers", gd.workers);
      merge(*gen, cfg, "--explore-eps", "explore_eps", gd.explore_eps);
      merge(*gen, cfg, "--action-noise", "action_noise", gd.action_noise);
      merge(*gen, cfg, "--random-frac", "random_frac", gd.random_frac);
      merge_seed(*gen, cfg, gd.seed);
      return networld::cli::run_gen_data(gd);
    }
    if (pre->parsed()) {
      const KvDoc cfg = load_config(pt_config);
      merge(*pre, cfg, "--hold-out", "hold_out", pt.hold_out);
      merge(*pre, cfg, "--epochs", "epochs", pt.epochs);
      merge(*pre, cfg, "--steps-per-epoch", "steps_per_epoch", pt.steps_per_epoch);
      merge(*pre, cfg, "--batch", "batch", pt.batch);
      merge(*pre, cfg, "--lr", "lr", pt.lr);
      merge(*pre, cfg, "--clf-weight", "clf_weight", pt.clf_weight);
      merge(*pre, cfg, "--recon-weight", "recon_weight", pt.recon_weight);
      merge(*pre, cfg, "--invdyn-weight", "invdyn_weight", pt.invdyn_weight);
      merge(*pre, cfg, "--gamma", "gamma", pt.gamma);
      merge(*pre, cfg, "--latent", "latent", pt.latent);
      merge(*pre, cfg, "--horizon", "horizon", pt.horizon);
      merge(*pre, cfg, "--unet-base", "unet_base", pt.unet_base);
      merge(*pre, cfg, "--clf-base", "clf_base", pt.clf_base);
      merge(*pre, cfg, "--diffusion-steps", "diffusion_steps", pt.diffusion_steps);
      merge(*pre, cfg, "--return-bins", "return_bins", pt.return_bins);
      merge(*pre, cfg, "--groups", "groups", pt.groups);
      merge_seed(*pre, cfg, pt.seed);
      return networld::cli::run_pretrain(pt);
    }
    if (fin->parsed()) {
      const KvDoc cfg = load_config(ft_config);
      merge(*fin, cfg, "--epochs", "epochs", ft.epochs);
      merge(*fin, cfg, "--steps-per-epoch", "steps_per_epoch", ft.steps_per_epoch);
      merge(*fin, cfg, "--batch", "batch", ft.batch);
      merge(*fin, cfg, "--lr", "lr", ft.lr);
      merge(*fin, cfg, "--core-lr-scale", "core_lr_scale", ft.core_lr_scale);
      merge(*fin, cfg, "--clf-weight", "clf_weight", ft.clf_weight);
      merge(*fin, cfg, "--recon-weight", "recon_weight", ft.recon_weight);
      merge(*fin, cfg, "--invdyn-weight", "invdyn_weight", ft.invdyn_weight);
      merge(*fin, cfg, "--gamma", "gamma", ft.gamma);
      merge_seed(*fin, cfg, ft.seed);
      return networld::cli::run_finetune(ft);
    }
    if (evl->parsed()) {
      const KvDoc cfg = load_config(ev_config);
      merge(*evl, cfg, "--model", "model", ev.model);
      merge(*evl, cfg, "--policy", "policy", ev.policy);
      merge(*evl, cfg, "--seeds", "seeds", ev.seeds);
      merge(*evl, cfg, "--episodes-per-seed", "episodes_per_seed", ev.episodes_per_seed);
      merge(*evl, cfg, "--guidance", "guidance", ev.guidance);
      merge(*evl, cfg, "--replan", "replan", ev.replan);
      merge(*evl, cfg, "--horizon", "horizon", ev.horizon);
      merge(*evl, cfg, "--agents", "agents", ev.agents);
      merge(*evl, cfg, "--steps", "steps", ev.steps);
      merge_seed(*evl, cfg, ev.seed);
      return networld::cli::run_eval(ev);
    }
    if (plot->parsed()) return networld::cli::run_plot(pl);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
