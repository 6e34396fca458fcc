#include "networld/plan/planner.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "networld/diffusion/sampler.hpp"
#include "networld/util/csv.hpp"

namespace networld::plan {
namespace {

constexpr std::uint64_t kPlanStream = 0x706c616eULL;     // noise for plan segments
constexpr std::uint64_t kActionStream = 0x616374ULL;     // random-policy draws
constexpr std::uint64_t kEpisodeStream = 0x65706973ULL;  // per-seed episode seeds

}  // namespace

Planner::Planner(const model::WorldModelF& m, envs::TaskId task, const PlannerConfig& cfg)
    : model_(m), task_(task), cfg_(cfg) {
  util::require(cfg.guidance_scale >= 0.0, "guidance scale must be >= 0, got ",
                cfg.guidance_scale);
  util::require(cfg.replan_interval >= 1, "replan interval must be >= 1, got ",
                cfg.replan_interval);
  horizon_ = cfg.horizon > 0 ? cfg.horizon : m.config().horizon;
  util::require(horizon_ >= 2, "planning horizon must be at least 2, got ", horizon_);
  util::require(cfg.replan_interval < horizon_, "replan interval ", cfg.replan_interval,
                " does not fit a horizon of ", horizon_);
  (void)model_.task_index(task);  // reject models not built for this task
}

bool Planner::resample(const nn::TensorF& obs, const nn::TensorF& adj, std::int64_t step) {
  const nn::Index A = obs.size(0);
  const nn::Index d = model_.config().latent_dim;

  // Condition rows: own latent, 1-hop neighbor mean, has-neighbors flag.
  const nn::TensorF z = model_.encoder(task_).encode_raw(obs);
  nn::TensorF cond({A, model_.config().channels()});
  for (nn::Index a = 0; a < A; ++a) {
    for (nn::Index i = 0; i < d; ++i) cond.at(a, i) = z.at(a, i);
    nn::Index nbrs = 0;
    for (nn::Index j = 0; j < A; ++j) {
      if (j == a || adj.at(a, j) == 0.0f) continue;
      ++nbrs;
      for (nn::Index i = 0; i < d; ++i) cond.at(a, d + i) += z.at(j, i);
    }
    if (nbrs > 0) {
      for (nn::Index i = 0; i < d; ++i) cond.at(a, d + i) /= static_cast<float>(nbrs);
      cond.at(a, 2 * d) = 1.0f;
    }
  }

  std::vector<util::Rng> streams;
  streams.reserve(static_cast<size_t>(A));
  for (nn::Index a = 0; a < A; ++a)
    streams.push_back(util::Rng::derive(
        cfg_.seed,
        {kPlanStream, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(step)}));

  const std::vector<int> task_ids(static_cast<size_t>(A), model_.task_embed_id(task_));
  const diffusion::EpsFn<float> eps_fn = [&](const nn::TensorF& x, int t) {
    nn::GraphF g;
    const std::vector<int> ts(static_cast<size_t>(A), t);
    return g.value(model_.unet().apply(g, g.constant(x), ts, task_ids));
  };
  diffusion::GuidanceFn<float> guide_fn;
  if (cfg_.guidance_scale != 0.0)
    guide_fn = [&](const nn::TensorF& x, int t) {
      return guidance::return_gradient(model_.classifier(), x, t, task_ids,
                                       &stats_.guidance_nonfinite);
    };

  try {
    segment_ = diffusion::sample_segment_streams(model_.schedule(), eps_fn, guide_fn,
                                                 cfg_.guidance_scale, cond, horizon_, streams);
  } catch (const std::runtime_error&) {
    segment_step_ = -1;
    return false;
  }
  segment_step_ = step;
  ++stats_.samples;
  return true;
}

nn::TensorF Planner::plan_step(const nn::TensorF& obs, const nn::TensorF& adj,
                               std::int64_t step) {
  const envs::TaskSpec& spec = model_.spec(task_);
  util::require(obs.ndim() == 2 && obs.size(1) == spec.obs_dim(), "observations must be [A,",
                spec.obs_dim(), "], got ", nn::shape_str(obs.shape()));
  const nn::Index A = obs.size(0);
  util::require(adj.ndim() == 2 && adj.size(0) == A && adj.size(1) == A, "adjacency must be [",
                A, ",", A, "], got ", nn::shape_str(adj.shape()));
  util::require(obs.all_finite(), "non-finite observation at step ", step);
  ++stats_.decisions;

  std::int64_t offset = segment_step_ >= 0 ? step - segment_step_ : -1;
  if (offset < 0 || offset >= cfg_.replan_interval || segment_.size(0) != A)
    offset = resample(obs, adj, step) ? 0 : -1;
  if (offset < 0) {
    stats_.fallbacks += A;
    return envs::expert_actions(spec, obs);
  }

  const nn::Index d = model_.config().latent_dim;
  nn::TensorF pairs({A, 2 * d});
  for (nn::Index a = 0; a < A; ++a)
    for (nn::Index i = 0; i < d; ++i) {
      pairs.at(a, i) = segment_.at(a, i, offset);
      pairs.at(a, d + i) = segment_.at(a, i, offset + 1);
    }
  return model_.invdyn(task_).infer(pairs);
}

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::kPlanner: return "planner";
    case Policy::kExpert: return "expert";
    case Policy::kRandom: return "random";
  }
  util::fail("unknown policy id ", static_cast<int>(p));
}

Policy policy_from_name(const std::string& name) {
  if (name == "planner") return Policy::kPlanner;
  if (name == "expert") return Policy::kExpert;
  if (name == "random") return Policy::kRandom;
  util::fail("unknown policy '", name, "' (expected planner, expert, or random)");
}

EpisodeSummary run_episode(const model::WorldModelF* model, const envs::TaskSpec& spec,
                           const PlannerConfig& cfg, Policy policy, std::uint64_t seed) {
  spec.validate();
  const envs::Env env(spec);
  envs::EnvState state = env.reset(seed);

  std::optional<Planner> planner;
  if (policy == Policy::kPlanner) {
    util::require(model != nullptr, "the planner policy needs a model");
    PlannerConfig pc = cfg;
    pc.seed = util::Rng::key(cfg.seed, {seed});
    planner.emplace(*model, spec.task, pc);
  }
  util::Rng act_rng = util::Rng::derive(seed, {kActionStream});

  EpisodeSummary out;
  out.num_agents = spec.num_agents;
  out.steps = spec.episode_len;
  out.rewards.reserve(static_cast<size_t>(spec.episode_len) * spec.num_agents);

  double total_ms = 0.0;
  for (int k = 0; k < spec.episode_len; ++k) {
    try {
      const nn::TensorF obs = env.obs(state);
      const auto t0 = std::chrono::steady_clock::now();
      nn::TensorF actions;
      switch (policy) {
        case Policy::kPlanner: actions = planner->plan_step(obs, env.adjacency(state), k); break;
        case Policy::kExpert: actions = envs::expert_actions(spec, obs); break;
        case Policy::kRandom: actions = envs::random_actions(spec, act_rng); break;
      }
      total_ms +=
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      const std::vector<float> r = env.step(state, actions);
      out.rewards.insert(out.rewards.end(), r.begin(), r.end());
    } catch (const std::exception& e) {
      util::fail("episode step ", k, ": ", e.what());
    }
  }
  double sum = 0.0;
  for (const float r : out.rewards) sum += r;
  out.mean_reward = sum / static_cast<double>(out.rewards.size());
  out.ms_per_decision = total_ms / spec.episode_len;
  if (planner) out.stats = planner->stats();
  return out;
}

void write_episode_csv(const EpisodeSummary& s, const std::string& path) {
  util::CsvWriter out(path, {"step", "agent", "reward"});
  for (int k = 0; k < s.steps; ++k)
    for (int a = 0; a < s.num_agents; ++a)
      out.write_row({std::to_string(k), std::to_string(a),
                     util::csv_double(s.rewards[static_cast<size_t>(k) * s.num_agents + a])});
}

EvalResult evaluate(const model::WorldModelF* model, const envs::TaskSpec& spec,
                    const PlannerConfig& cfg, Policy policy,
                    const std::vector<std::uint64_t>& seeds, int episodes_per_seed) {
  util::require(!seeds.empty(), "evaluation needs at least one seed");
  util::require(episodes_per_seed >= 1, "episodes per seed must be >= 1, got ",
                episodes_per_seed);

  EvalResult res;
  double ms = 0.0;
  for (const std::uint64_t seed : seeds) {
    double acc = 0.0;
    for (int e = 0; e < episodes_per_seed; ++e) {
      const std::uint64_t ep_seed =
          util::Rng::key(seed, {kEpisodeStream, static_cast<std::uint64_t>(e)});
      const EpisodeSummary ep = run_episode(model, spec, cfg, policy, ep_seed);
      res.rows.push_back({seed, e, ep.mean_reward, ep.stats.fallbacks});
      acc += ep.mean_reward;
      ms += ep.ms_per_decision;
      res.fallbacks += ep.stats.fallbacks;
    }
    res.per_seed.push_back(acc / episodes_per_seed);
  }
  for (const double v : res.per_seed) res.mean += v;
  res.mean /= static_cast<double>(res.per_seed.size());
  if (res.per_seed.size() > 1) {
    double ss = 0.0;
    for (const double v : res.per_seed) ss += (v - res.mean) * (v - res.mean);
    res.stddev = std::sqrt(ss / static_cast<double>(res.per_seed.size() - 1));
  }
  res.ms_per_decision = ms / static_cast<double>(seeds.size() * episodes_per_seed);
  return res;
}

}  // namespace networld::plan
