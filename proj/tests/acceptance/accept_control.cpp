// End-to-end control quality. Criterion 5 trains a per-task world model
// offline and requires the receding-horizon planner to clear the random
// policy by three pooled standard deviations while staying within 20% of the
// scripted expert. Criterion 6 pretrains on two tasks, adapts to ten
// trajectories of the third, and requires the adapted model to beat an
// identical model trained from scratch on the same ten trajectories and
// step budget, for all three rotations.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "helpers.hpp"
#include "networld/data/trajectory.hpp"
#include "networld/model/worldmodel.hpp"
#include "networld/plan/planner.hpp"
#include "networld/train/trainer.hpp"
#include "networld/util/rng.hpp"

namespace networld::acceptance {

namespace {

constexpr int kEvalAgents = 4;
constexpr int kEvalSteps = 200;

envs::TaskSpec sized_task(const std::string& name, int agents, int steps) {
  envs::TaskSpec s = envs::make_task(name);
  s.num_agents = agents;
  s.episode_len = steps;
  s.validate();
  return s;
}

model::WorldModelConfig control_config(std::vector<envs::TaskSpec> tasks) {
  model::WorldModelConfig mc;
  mc.latent_dim = 8;
  mc.horizon = 8;
  mc.unet_base = 16;
  mc.clf_base = 16;
  mc.enc_hidden = 32;
  mc.invdyn_hidden = 32;
  mc.time_emb_dim = 16;
  mc.task_emb_dim = 8;
  mc.cond_hidden = 32;
  mc.groups = 8;
  mc.diffusion_steps = 50;
  mc.return_bins = 65;
  mc.return_lo = -150.0;
  mc.return_hi = 150.0;
  mc.tasks = std::move(tasks);
  return mc;
}

train::TrainConfig train_config(int epochs, int steps_per_epoch, std::uint64_t seed) {
  train::TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = epochs;
  tc.steps_per_epoch = steps_per_epoch;
  tc.lr = 1e-3;
  tc.gamma = 0.95;  // keeps 200-step return targets well inside the bin range
  tc.seed = seed;
  return tc;
}

plan::PlannerConfig planner_config() {
  plan::PlannerConfig pc;
  pc.guidance_scale = 1.0;
  pc.replan_interval = 1;
  pc.seed = 0;
  return pc;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

}  // namespace

Outcome check_control() {
  constexpr double kPerTaskLimitS = 1200.0;
  const std::vector<std::uint64_t> seeds = {101, 202, 303};

  bool all_ok = true;
  Detail d;
  for (const std::string& name : {"cbf", "rb", "ns"}) {
    Stopwatch sw;
    const envs::TaskSpec spec = sized_task(name, kEvalAgents, kEvalSteps);

    data::GenerateOptions gopt;
    gopt.num_episodes = 24;
    gopt.seed = util::Rng::key(0xDA7A, {static_cast<std::uint64_t>(spec.task)});
    const data::TrajectoryStore store = data::generate(spec, gopt);

    model::WorldModelF m(control_config({spec}), 0x5EED + static_cast<std::uint64_t>(spec.task));
    train::Trainer tr(m, train_config(2, 400, 77));
    tr.add_data(&store);
    tr.pretrain();

    const plan::PlannerConfig pc = planner_config();
    const plan::EvalResult P = plan::evaluate(&m, spec, pc, plan::Policy::kPlanner, seeds, 1);
    const plan::EvalResult R = plan::evaluate(nullptr, spec, pc, plan::Policy::kRandom, seeds, 1);
    const plan::EvalResult E = plan::evaluate(nullptr, spec, pc, plan::Policy::kExpert, seeds, 1);

    const double pooled = std::sqrt(0.5 * (P.stddev * P.stddev + R.stddev * R.stddev));
    const bool gap_ok = P.mean - R.mean >= 3.0 * pooled;
    const bool expert_ok = P.mean >= E.mean - 0.2 * std::abs(E.mean);
    const bool time_ok = sw.seconds() < kPerTaskLimitS;
    all_ok = all_ok && gap_ok && expert_ok && time_ok;

    std::ostringstream line;
    line << name << "[planner=" << fmt(P.mean) << " random=" << fmt(R.mean)
         << " expert=" << fmt(E.mean) << " pooled=" << fmt(pooled)
         << " fallbacks=" << P.fallbacks;
    if (!gap_ok) line << " GAP";
    if (!expert_ok) line << " EXPERT";
    if (!time_ok) line << " TIME";
    line << "]";
    d.text(line.str());
  }

  Outcome out;
  out.pass = all_ok;
  out.detail = d.str();
  return out;
}

Outcome check_transfer() {
  constexpr double kPerRotationLimitS = 1800.0;
  const std::vector<std::uint64_t> seeds = {11, 22, 33};
  const std::vector<std::string> names = {"cbf", "rb", "ns"};

  bool all_ok = true;
  Detail d;
  for (size_t h = 0; h < names.size(); ++h) {
    Stopwatch sw;
    std::vector<envs::TaskSpec> specs;
    for (const auto& n : names) specs.push_back(sized_task(n, kEvalAgents, 500));

    std::vector<data::TrajectoryStore> pre;
    for (size_t i = 0; i < names.size(); ++i) {
      if (i == h) continue;
      data::GenerateOptions gopt;
      gopt.num_episodes = 20;
      gopt.seed = util::Rng::key(0x9E7A, {static_cast<std::uint64_t>(i)});
      pre.push_back(data::generate(specs[i], gopt));
    }
    data::GenerateOptions hopt;
    hopt.num_episodes = 10;
    hopt.seed = util::Rng::key(0x901D, {static_cast<std::uint64_t>(h)});
    const data::TrajectoryStore held = data::generate(specs[h], hopt);

    const model::WorldModelConfig mc = control_config(specs);
    const std::uint64_t mseed = 0xF00D + h;

    model::WorldModelF adapted(mc, mseed);
    {
      train::Trainer tr(adapted, train_config(2, 300, 71));
      for (const auto& s : pre) tr.add_data(&s);
      tr.pretrain();
    }
    {
      train::Trainer tr(adapted, train_config(1, 300, 72));
      tr.add_data(&held);
      tr.finetune(specs[h].task);
    }

    model::WorldModelF scratch(mc, mseed);
    {
      train::Trainer tr(scratch, train_config(1, 300, 72));
      tr.add_data(&held);
      tr.pretrain();
    }

    const envs::TaskSpec espec = sized_task(names[h], kEvalAgents, kEvalSteps);
    const plan::PlannerConfig pc = planner_config();
    const plan::EvalResult FT =
        plan::evaluate(&adapted, espec, pc, plan::Policy::kPlanner, seeds, 1);
    const plan::EvalResult SC =
        plan::evaluate(&scratch, espec, pc, plan::Policy::kPlanner, seeds, 1);

    const bool reward_ok = FT.mean >= SC.mean;
    const bool time_ok = sw.seconds() < kPerRotationLimitS;
    all_ok = all_ok && reward_ok && time_ok;

    std::ostringstream line;
    line << "hold-" << names[h] << "[finetuned=" << fmt(FT.mean) << " scratch=" << fmt(SC.mean)
         << " fallbacks=" << FT.fallbacks << "/" << SC.fallbacks;
    if (!reward_ok) line << " REWARD";
    if (!time_ok) line << " TIME";
    line << "]";
    d.text(line.str());
  }

  Outcome out;
  out.pass = all_ok;
  out.detail = d.str();
  return out;
}

}  // namespace networld::acceptance
