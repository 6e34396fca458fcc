#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>

#include "manifest.hpp"
#include "networld/data/trajectory.hpp"
#include "networld/model/worldmodel.hpp"
#include "networld/plan/planner.hpp"
#include "networld/train/trainer.hpp"
#include "networld/util/csv.hpp"
#include "networld/util/require.hpp"
#include "viz/chart.hpp"

namespace networld::cli {
namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!tok.empty()) {
      try {
        size_t used = 0;
        const std::uint64_t v = std::stoull(tok, &used);
        util::require(used == tok.size(), "trailing characters");
        seeds.push_back(v);
      } catch (const std::exception&) {
        util::fail("bad seed '", tok, "' in --seeds '", text, "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  util::require(!seeds.empty(), "--seeds '", text, "' names no seeds");
  return seeds;
}

int find_col(const std::vector<std::string>& header, const std::string& name,
             const std::string& path) {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  util::fail(path, " has no '", name, "' column");
}

// loss.csv / metrics.csv are usually told apart by their directory.
std::string label_for(const std::string& path) {
  const fs::path p(path);
  const std::string stem = p.stem().string();
  if ((stem == "loss" || stem == "metrics") && p.has_parent_path() &&
      !p.parent_path().filename().string().empty())
    return p.parent_path().filename().string();
  return stem;
}

train::TrainConfig train_config(int batch, int epochs, int steps_per_epoch, double lr,
                                double clf_w, double recon_w, double invdyn_w, double gamma,
                                double core_scale, std::uint64_t seed, const std::string& out) {
  train::TrainConfig tc;
  tc.batch_size = batch;
  tc.epochs = epochs;
  tc.steps_per_epoch = steps_per_epoch;
  tc.lr = lr;
  tc.clf_weight = clf_w;
  tc.recon_weight = recon_w;
  tc.invdyn_weight = invdyn_w;
  tc.gamma = gamma;
  tc.core_lr_scale = core_scale;
  tc.seed = seed;
  tc.out_dir = out;
  return tc;
}

void print_report(const char* tag, const train::RunReport& rep) {
  const int window = std::min<int>(20, static_cast<int>(rep.steps.size()));
  std::printf("%s: %zu steps, loss %.5f -> %.5f (window %d), %lld skipped\n", tag,
              rep.steps.size(), rep.mean_head(window), rep.mean_tail(window), window,
              static_cast<long long>(rep.skipped));
}

}  // namespace

int run_gen_data(const GenDataOpts& o) {
  util::require(o.policy == "expert" || o.policy == "random",
                "--policy must be expert or random, got '", o.policy, "'");
  envs::TaskSpec spec = envs::make_task(o.task);
  if (o.agents > 0) spec.num_agents = o.agents;
  if (o.steps > 0) spec.episode_len = o.steps;
  spec.validate();

  data::GenerateOptions gen;
  gen.num_episodes = o.episodes;
  gen.seed = o.seed;
  gen.workers = o.workers;
  gen.explore_eps = o.explore_eps;
  gen.action_noise = o.action_noise;
  gen.random_episode_frac = o.policy == "random" ? 1.0 : o.random_frac;

  const data::TrajectoryStore store = data::generate(spec, gen);
  store.save(o.out);

  util::KvDoc cfg;
  cfg.set("task", o.task);
  cfg.set("policy", o.policy);
  cfg.set("episodes", o.episodes);
  cfg.set("steps", spec.episode_len);
  cfg.set("agents", spec.num_agents);
  cfg.set("workers", o.workers);
  cfg.set("explore_eps", o.explore_eps);
  cfg.set("action_noise", o.action_noise);
  cfg.set("random_frac", gen.random_episode_frac);
  cfg.set("seed", o.seed);
  write_manifest(o.out, "gen-data", cfg);

  std::printf("wrote %d %s episodes (%d agents x %d steps) to %s\n", store.num_episodes,
              o.task.c_str(), spec.num_agents, spec.episode_len, o.out.c_str());
  return 0;
}

int run_pretrain(const PretrainOpts& o) {
  util::require(!o.data.empty(), "pretrain needs at least one --data directory");
  util::require(!o.out.empty(), "pretrain needs --out");

  std::vector<data::TrajectoryStore> stores;
  stores.reserve(o.data.size());
  model::WorldModelConfig mc;
  mc.latent_dim = o.latent;
  mc.horizon = o.horizon;
  mc.unet_base = o.unet_base;
  mc.clf_base = o.clf_base;
  mc.diffusion_steps = o.diffusion_steps;
  mc.return_bins = o.return_bins;
  mc.groups = o.groups;
  for (const auto& dir : o.data) {
    stores.push_back(data::TrajectoryStore::load(dir));
    const envs::TaskId task = stores.back().spec.task;
    for (size_t i = 0; i + 1 < stores.size(); ++i)
      util::require(stores[i].spec.task != task, "two datasets for task '",
                    envs::task_name(task), "'");
    mc.tasks.push_back(stores.back().spec);
  }

  std::optional<envs::TaskId> held;
  if (!o.hold_out.empty()) {
    held = envs::task_from_name(o.hold_out);
    bool present = false;
    for (const auto& t : mc.tasks) present = present || t.task == *held;
    util::require(present, "--hold-out ", o.hold_out, " matches none of the datasets");
  }

  fs::create_directories(o.out);
  model::WorldModelF m(mc, o.seed);
  train::Trainer tr(m, train_config(o.batch, o.epochs, o.steps_per_epoch, o.lr, o.clf_weight,
                                    o.recon_weight, o.invdyn_weight, o.gamma, 0.1, o.seed,
                                    o.out));
  int used = 0;
  for (const auto& s : stores) {
    if (held && s.spec.task == *held) continue;
    tr.add_data(&s);
    ++used;
  }
  util::require(used > 0, "--hold-out leaves nothing to train on");
  const train::RunReport rep = tr.pretrain();

  util::KvDoc cfg;
  std::string datalist;
  for (const auto& d : o.data) datalist += (datalist.empty() ? "" : ",") + d;
  cfg.set("data", datalist);
  cfg.set("hold_out", o.hold_out);
  cfg.set("epochs", o.epochs);
  cfg.set("steps_per_epoch", o.steps_per_epoch);
  cfg.set("batch", o.batch);
  cfg.set("lr", o.lr);
  cfg.set("clf_weight", o.clf_weight);
  cfg.set("recon_weight", o.recon_weight);
  cfg.set("invdyn_weight", o.invdyn_weight);
  cfg.set("gamma", o.gamma);
  cfg.set("latent", o.latent);
  cfg.set("horizon", o.horizon);
  cfg.set("unet_base", o.unet_base);
  cfg.set("clf_base", o.clf_base);
  cfg.set("diffusion_steps", o.diffusion_steps);
  cfg.set("return_bins", o.return_bins);
  cfg.set("groups", o.groups);
  cfg.set("seed", o.seed);
  write_manifest(o.out, "pretrain", cfg);

  print_report("pretrain", rep);
  std::printf("checkpoint: %s/model.ckpt\n", o.out.c_str());
  return 0;
}

int run_finetune(const FinetuneOpts& o) {
  util::require(!o.model.empty(), "finetune needs --model");
  util::require(!o.data.empty(), "finetune needs --data");
  util::require(!o.task.empty(), "finetune needs --task");
  util::require(!o.out.empty(), "finetune needs --out");

  model::WorldModelF m = model::WorldModelF::load(o.model);
  const data::TrajectoryStore store = data::TrajectoryStore::load(o.data);
  const envs::TaskId task = envs::task_from_name(o.task);
  util::require(store.spec.task == task, "dataset at ", o.data, " holds '",
                envs::task_name(store.spec.task), "' episodes, not '", o.task, "'");

  fs::create_directories(o.out);
  train::Trainer tr(m, train_config(o.batch, o.epochs, o.steps_per_epoch, o.lr, o.clf_weight,
                                    o.recon_weight, o.invdyn_weight, o.gamma, o.core_lr_scale,
                                    o.seed, o.out));
  tr.add_data(&store);
  const train::RunReport rep = tr.finetune(task);

  util::KvDoc cfg;
  cfg.set("model", o.model);
  cfg.set("data", o.data);
  cfg.set("task", o.task);
  cfg.set("epochs", o.epochs);
  cfg.set("steps_per_epoch", o.steps_per_epoch);
  cfg.set("batch", o.batch);
  cfg.set("lr", o.lr);
  cfg.set("core_lr_scale", o.core_lr_scale);
  cfg.set("clf_weight", o.clf_weight);
  cfg.set("recon_weight", o.recon_weight);
  cfg.set("invdyn_weight", o.invdyn_weight);
  cfg.set("gamma", o.gamma);
  cfg.set("seed", o.seed);
  write_manifest(o.out, "finetune", cfg);

  print_report("finetune", rep);
  std::printf("checkpoint: %s/model.ckpt\n", o.out.c_str());
  return 0;
}

int run_eval(const EvalOpts& o) {
  util::require(!o.out.empty(), "eval needs --out");
  const plan::Policy policy = plan::policy_from_name(o.policy);
  const envs::TaskId task = envs::task_from_name(o.task);

  std::optional<model::WorldModelF> m;
  envs::TaskSpec spec;
  if (!o.model.empty()) {
    m.emplace(model::WorldModelF::load(o.model));
    spec = m->spec(task);  // evaluate in the environment the model saw
  } else {
    util::require(policy != plan::Policy::kPlanner, "the planner policy needs --model");
    spec = envs::make_task(o.task);
  }
  if (o.agents > 0) spec.num_agents = o.agents;
  if (o.steps > 0) spec.episode_len = o.steps;
  spec.validate();

  plan::PlannerConfig pc;
  pc.guidance_scale = o.guidance;
  pc.horizon = o.horizon;
  pc.replan_interval = o.replan;
  pc.seed = o.seed;

  const std::vector<std::uint64_t> seeds = parse_seeds(o.seeds);
  const plan::EvalResult res =
      plan::evaluate(m ? &*m : nullptr, spec, pc, policy, seeds, o.episodes_per_seed);

  fs::create_directories(o.out);
  {
    util::CsvWriter csv((fs::path(o.out) / "metrics.csv").string(),
                        {"task", "policy", "seed", "episode", "mean_reward", "fallbacks"});
    for (const auto& row : res.rows)
      csv.write_row({o.task, o.policy, std::to_string(row.seed), std::to_string(row.episode),
                     util::csv_double(row.mean_reward), std::to_string(row.fallbacks)});
  }

  util::KvDoc cfg;
  cfg.set("model", o.model);
  cfg.set("task", o.task);
  cfg.set("policy", o.policy);
  cfg.set("seeds", o.seeds);
  cfg.set("episodes_per_seed", o.episodes_per_seed);
  cfg.set("guidance", o.guidance);
  cfg.set("replan", o.replan);
  cfg.set("horizon", o.horizon);
  cfg.set("agents", spec.num_agents);
  cfg.set("steps", spec.episode_len);
  cfg.set("seed", o.seed);
  write_manifest(o.out, "eval", cfg);

  std::printf("%s/%s: mean reward %.6f +- %.6f over %zu seed(s), %lld fallbacks, %.2f ms/decision\n",
              o.task.c_str(), o.policy.c_str(), res.mean, res.stddev, seeds.size(),
              static_cast<long long>(res.fallbacks), res.ms_per_decision);
  return 0;
}

int run_plot(const PlotOpts& o) {
  util::require(!o.loss.empty() || !o.metrics.empty(),
                "plot needs --loss and/or --metrics CSV files");
  util::require(!o.out.empty(), "plot needs --out");
  fs::create_directories(o.out);
  std::string wrote;

  if (!o.loss.empty()) {
    std::vector<viz::Series> series;
    for (const auto& path : o.loss) {
      const auto rows = util::read_csv(path);
      util::require(rows.size() >= 2, path, " has no data rows");
      const int cs = find_col(rows[0], "step", path);
      const int ct = find_col(rows[0], "total", path);
      viz::Series s;
      s.label = label_for(path);
      for (size_t i = 1; i < rows.size(); ++i) {
        s.x.push_back(std::stod(rows[i][static_cast<size_t>(cs)]));
        s.y.push_back(std::stod(rows[i][static_cast<size_t>(ct)]));
      }
      series.push_back(std::move(s));
    }
    viz::write_png(viz::render_curves(640, 400, "training loss", "step", "loss", series),
                   (fs::path(o.out) / "curves.png").string());
    wrote += " curves.png";
  }

  if (!o.metrics.empty()) {
    std::vector<viz::Bar> bars;
    for (const auto& path : o.metrics) {
      const auto rows = util::read_csv(path);
      util::require(rows.size() >= 2, path, " has no data rows");
      const int cm = find_col(rows[0], "mean_reward", path);
      double acc = 0.0;
      for (size_t i = 1; i < rows.size(); ++i) acc += std::stod(rows[i][static_cast<size_t>(cm)]);
      bars.push_back({label_for(path), acc / static_cast<double>(rows.size() - 1)});
    }
    viz::write_png(viz::render_bars(640, 400, "mean evaluation reward", "reward", bars),
                   (fs::path(o.out) / "ratio.png").string());
    wrote += " ratio.png";
  }

  util::KvDoc cfg;
  std::string l, mt;
  for (const auto& p : o.loss) l += (l.empty() ? "" : ",") + p;
  for (const auto& p : o.metrics) mt += (mt.empty() ? "" : ",") + p;
  cfg.set("loss", l);
  cfg.set("metrics", mt);
  write_manifest(o.out, "plot", cfg);

  std::printf("wrote%s to %s\n", wrote.c_str(), o.out.c_str());
  return 0;
}

}  // namespace networld::cli
