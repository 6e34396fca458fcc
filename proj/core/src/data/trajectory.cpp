#include "networld/data/trajectory.hpp"

#include <cmath>
#include <filesystem>

#include "networld/util/binio.hpp"
#include "networld/util/kv.hpp"
#include "networld/util/parallel.hpp"
#include "networld/util/rng.hpp"

namespace networld::data {

namespace {
namespace fs = std::filesystem;
}

nn::TensorF TrajectoryStore::obs_window(int ep, int agent, int start, int horizon) const {
  util::require(start >= 0 && start + horizon <= frames(), "window [", start, ", ", start + horizon,
                ") exceeds the ", frames(), " stored frames");
  nn::TensorF out({horizon, spec.obs_dim()});
  for (int t = 0; t < horizon; ++t)
    for (int d = 0; d < spec.obs_dim(); ++d) out.at(t, d) = obs_at(ep, start + t, agent, d);
  return out;
}

nn::TensorF TrajectoryStore::act_window(int ep, int agent, int start, int horizon) const {
  util::require(start >= 0 && start + horizon - 1 <= spec.episode_len, "action window out of range");
  nn::TensorF out({horizon - 1, spec.action_dim()});
  for (int t = 0; t + 1 < horizon; ++t)
    for (int d = 0; d < spec.action_dim(); ++d) out.at(t, d) = act_at(ep, start + t, agent, d);
  return out;
}

std::vector<int> TrajectoryStore::neighbors(int ep, int agent) const {
  std::vector<int> out;
  for (int j = 0; j < spec.num_agents; ++j)
    if (adj_at(ep, agent, j) != 0.0f) out.push_back(j);
  return out;
}

double TrajectoryStore::return_to_go(int ep, int agent, int start, double gamma) const {
  double acc = 0.0, g = 1.0;
  for (int t = start; t < spec.episode_len; ++t, g *= gamma) acc += g * rew_at(ep, t, agent);
  return acc;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  double acc = 0.0, g = 1.0;
  for (double r : rewards) {
    acc += g * r;
    g *= gamma;
  }
  return acc;
}

void TrajectoryStore::validate() const {
  spec.validate();
  util::require(num_episodes > 0, "trajectory store is empty");
  const size_t E = static_cast<size_t>(num_episodes);
  const size_t A = static_cast<size_t>(spec.num_agents);
  const size_t T = static_cast<size_t>(spec.episode_len);
  util::require(obs.size() == E * (T + 1) * A * static_cast<size_t>(spec.obs_dim()),
                "observation buffer has ", obs.size(), " values, expected ",
                E * (T + 1) * A * static_cast<size_t>(spec.obs_dim()));
  util::require(act.size() == E * T * A * static_cast<size_t>(spec.action_dim()),
                "action buffer size mismatch");
  util::require(rew.size() == E * T * A, "reward buffer size mismatch");
  util::require(adj.size() == E * A * A, "adjacency buffer size mismatch");
  auto finite = [](const std::vector<float>& v) {
    for (float x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  util::require(finite(obs) && finite(act) && finite(rew) && finite(adj),
                "trajectory store contains non-finite values");
}

void TrajectoryStore::save(const std::string& dir) const {
  validate();
  fs::create_directories(dir);
  util::KvDoc manifest = spec.to_kv();
  manifest.set("format", "networld-dataset-v1");
  manifest.set("num_episodes", num_episodes);
  manifest.save((fs::path(dir) / "manifest.txt").string());
  util::save_f32_file((fs::path(dir) / "obs.bin").string(), obs);
  util::save_f32_file((fs::path(dir) / "act.bin").string(), act);
  util::save_f32_file((fs::path(dir) / "rew.bin").string(), rew);
  util::save_f32_file((fs::path(dir) / "adj.bin").string(), adj);
}

TrajectoryStore TrajectoryStore::load(const std::string& dir) {
  const auto manifest_path = (fs::path(dir) / "manifest.txt").string();
  util::require(fs::exists(manifest_path), "no dataset at '", dir, "' (missing manifest.txt)");
  const util::KvDoc manifest = util::KvDoc::load(manifest_path);
  util::require(manifest.get_string("format", "") == "networld-dataset-v1", dir,
                ": unrecognized dataset format");
  TrajectoryStore store;
  store.spec = envs::TaskSpec::from_kv(manifest);
  store.num_episodes = static_cast<int>(manifest.get_int("num_episodes"));
  store.obs = util::load_f32_file((fs::path(dir) / "obs.bin").string());
  store.act = util::load_f32_file((fs::path(dir) / "act.bin").string());
  store.rew = util::load_f32_file((fs::path(dir) / "rew.bin").string());
  store.adj = util::load_f32_file((fs::path(dir) / "adj.bin").string());
  store.validate();
  return store;
}

TrajectoryStore generate(const envs::TaskSpec& spec, const GenerateOptions& opt) {
  spec.validate();
  util::require(opt.num_episodes > 0, "need at least one episode");
  util::require(opt.explore_eps >= 0.0 && opt.explore_eps <= 1.0, "explore_eps out of [0,1]");

  TrajectoryStore store;
  store.spec = spec;
  store.num_episodes = opt.num_episodes;
  const size_t E = static_cast<size_t>(opt.num_episodes);
  const size_t A = static_cast<size_t>(spec.num_agents);
  const size_t T = static_cast<size_t>(spec.episode_len);
  const size_t od = static_cast<size_t>(spec.obs_dim());
  const size_t ad = static_cast<size_t>(spec.action_dim());
  store.obs.resize(E * (T + 1) * A * od);
  store.act.resize(E * T * A * ad);
  store.rew.resize(E * T * A);
  store.adj.resize(E * A * A);

  const envs::Env env(spec);
  const int random_every =
      opt.random_episode_frac > 0.0 ? std::max(1, static_cast<int>(std::lround(1.0 / opt.random_episode_frac)))
                                    : 0;

  util::parallel_for(opt.num_episodes, opt.workers, [&](std::int64_t ep) {
    const std::uint64_t ep_seed = util::Rng::key(opt.seed, {1, static_cast<std::uint64_t>(ep)});
    util::Rng policy_rng = util::Rng::derive(opt.seed, {2, static_cast<std::uint64_t>(ep)});
    const bool random_ep = random_every > 0 && (ep % random_every) == random_every - 1;

    envs::EnvState state = env.reset(ep_seed);
    const auto adj = env.adjacency(state);
    for (size_t i = 0; i < A; ++i)
      for (size_t j = 0; j < A; ++j)
        store.adj[(static_cast<size_t>(ep) * A + i) * A + j] =
            adj.at(static_cast<nn::Index>(i), static_cast<nn::Index>(j));

    for (size_t t = 0; t <= T; ++t) {
      const auto o = env.obs(state);
      float* dst = store.obs.data() + ((static_cast<size_t>(ep) * (T + 1) + t) * A) * od;
      std::copy(o.data(), o.data() + A * od, dst);
      if (t == T) break;

      nn::TensorF actions =
          random_ep ? envs::random_actions(spec, policy_rng) : envs::expert_actions(spec, o);
      if (!random_ep) {
        // per-agent exploration: occasional random actions plus small jitter
        const double range = spec.action_hi() - spec.action_lo();
        for (size_t i = 0; i < A; ++i) {
          const bool swap = policy_rng.uniform() < opt.explore_eps;
          for (size_t d = 0; d < ad; ++d) {
            double a = actions.at(static_cast<nn::Index>(i), static_cast<nn::Index>(d));
            if (swap) {
              a = spec.discrete_actions()
                      ? static_cast<double>(policy_rng.uniform_int(spec.rb_blocks + 1))
                      : policy_rng.uniform(spec.action_lo(), spec.action_hi());
            } else if (!spec.discrete_actions() && opt.action_noise > 0.0) {
              a += policy_rng.normal(0.0, opt.action_noise * range);
            }
            actions.at(static_cast<nn::Index>(i), static_cast<nn::Index>(d)) =
                static_cast<float>(std::min(spec.action_hi(), std::max(spec.action_lo(), a)));
          }
        }
      }

      float* adst = store.act.data() + ((static_cast<size_t>(ep) * T + t) * A) * ad;
      std::copy(actions.data(), actions.data() + A * ad, adst);

      const auto r = env.step(state, actions);
      float* rdst = store.rew.data() + (static_cast<size_t>(ep) * T + t) * A;
      std::copy(r.begin(), r.end(), rdst);
    }
  });

  store.validate();
  return store;
}

}  // namespace networld::data
