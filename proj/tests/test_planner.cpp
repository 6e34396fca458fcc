#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "networld/plan/planner.hpp"
#include "networld/util/csv.hpp"

using namespace networld;
using nn::Index;

namespace {

envs::TaskSpec small_cbf() {
  envs::TaskSpec s = envs::make_task("cbf");
  s.num_agents = 4;
  s.episode_len = 10;
  return s;
}

// Untrained model with the zero-initialized denoiser and classifier heads
// opened up, so plans actually depend on the conditioning and guidance is a
// live code path.
model::WorldModelF awake_model(const envs::TaskSpec& spec, std::uint64_t seed) {
  model::WorldModelConfig cfg;
  cfg.latent_dim = 4;
  cfg.horizon = 6;
  cfg.unet_base = 8;
  cfg.clf_base = 8;
  cfg.groups = 4;
  cfg.diffusion_steps = 30;
  cfg.return_bins = 17;
  cfg.tasks = {spec};
  model::WorldModelF m(cfg, seed);
  util::Rng rng(seed + 99);
  for (auto* p : m.params().with_prefix("unet.head."))
    for (Index i = 0; i < p->value.numel(); ++i) p->value[i] = static_cast<float>(0.05 * rng.normal());
  for (auto* p : m.params().with_prefix("clf.head2."))
    for (Index i = 0; i < p->value.numel(); ++i) p->value[i] = static_cast<float>(0.02 * rng.normal());
  return m;
}

// 0-1-2-3 chain: agent 3 is outside the 1-hop neighborhood of agents 0 and 1.
nn::TensorF chain_adjacency() {
  nn::TensorF adj({4, 4});
  for (Index a = 0; a + 1 < 4; ++a) {
    adj.at(a, a + 1) = 1.0f;
    adj.at(a + 1, a) = 1.0f;
  }
  return adj;
}

bool rows_equal(const nn::TensorF& x, const nn::TensorF& y, Index row) {
  bool eq = true;
  for (Index k = 0; k < x.size(1); ++k) eq = eq && x.at(row, k) == y.at(row, k);
  return eq;
}

}  // namespace

TEST_SUITE("planner") {

TEST_CASE("actions depend only on the 1-hop neighborhood and are reproducible") {
  const auto spec = small_cbf();
  auto m = awake_model(spec, 17);
  const nn::TensorF adj = chain_adjacency();

  util::Rng rng(31);
  const nn::TensorF obs = nn::TensorF::randn({4, spec.obs_dim()}, rng);
  nn::TensorF obs_perturbed = obs;
  for (Index k = 0; k < spec.obs_dim(); ++k) obs_perturbed.at(3, k) += 0.7f;

  plan::PlannerConfig cfg;
  cfg.guidance_scale = 1.0;
  cfg.seed = 42;
  plan::Planner p1(m, envs::TaskId::kBeamforming, cfg);
  plan::Planner p2(m, envs::TaskId::kBeamforming, cfg);
  plan::Planner p3(m, envs::TaskId::kBeamforming, cfg);

  const nn::TensorF a1 = p1.plan_step(obs, adj, 0);
  const nn::TensorF a2 = p2.plan_step(obs_perturbed, adj, 0);
  const nn::TensorF a3 = p3.plan_step(obs, adj, 0);
  CHECK(a1.shape() == nn::Shape{4, 2});

  // Perturbing agent 3 cannot reach agents 0 and 1 within one hop.
  CHECK(rows_equal(a1, a2, 0));
  CHECK(rows_equal(a1, a2, 1));
  // It does reach agent 2 (neighbor mean) and agent 3 itself.
  CHECK(!rows_equal(a1, a2, 2));
  CHECK(!rows_equal(a1, a2, 3));
  // Identical inputs, seed, and step reproduce the actions bit for bit.
  for (Index i = 0; i < a1.numel(); ++i) CHECK(a1[i] == a3[i]);

  CHECK(p1.stats().decisions == 1);
  CHECK(p1.stats().samples == 1);
  CHECK(p1.stats().fallbacks == 0);
  CHECK(p1.stats().guidance_nonfinite == 0);
}

TEST_CASE("a sampled segment is executed open loop across the replan window") {
  const auto spec = small_cbf();
  auto m = awake_model(spec, 23);
  const nn::TensorF adj = chain_adjacency();
  util::Rng rng(5);
  const nn::TensorF obs = nn::TensorF::randn({4, spec.obs_dim()}, rng);
  const nn::TensorF stale = nn::TensorF::full({4, spec.obs_dim()}, 9.0f);

  plan::PlannerConfig cfg;
  cfg.guidance_scale = 0.0;
  cfg.replan_interval = 3;
  cfg.seed = 8;
  plan::Planner fresh(m, envs::TaskId::kBeamforming, cfg);
  plan::Planner reused(m, envs::TaskId::kBeamforming, cfg);
  CHECK(fresh.horizon() == 6);

  (void)fresh.plan_step(obs, adj, 0);
  (void)reused.plan_step(obs, adj, 0);
  // Inside the window the cached plan acts; the fresh observation is unused.
  const nn::TensorF b1 = fresh.plan_step(obs, adj, 1);
  const nn::TensorF b2 = reused.plan_step(stale, adj, 1);
  for (Index i = 0; i < b1.numel(); ++i) CHECK(b1[i] == b2[i]);
  (void)fresh.plan_step(obs, adj, 2);
  CHECK(fresh.stats().samples == 1);
  CHECK(fresh.stats().decisions == 3);

  // The window is exhausted: step 3 resamples from the observation again.
  const nn::TensorF c1 = fresh.plan_step(obs, adj, 3);
  CHECK(fresh.stats().samples == 2);
  (void)c1;

  fresh.invalidate();
  (void)fresh.plan_step(obs, adj, 4);
  CHECK(fresh.stats().samples == 3);

  plan::PlannerConfig bad = cfg;
  bad.replan_interval = 0;
  CHECK_THROWS_WITH_AS(plan::Planner(m, envs::TaskId::kBeamforming, bad),
                       doctest::Contains("replan interval"), std::runtime_error);
  bad.replan_interval = 6;  // needs horizon > interval
  CHECK_THROWS_WITH_AS(plan::Planner(m, envs::TaskId::kBeamforming, bad),
                       doctest::Contains("does not fit"), std::runtime_error);
  bad = cfg;
  bad.guidance_scale = -0.5;
  CHECK_THROWS_WITH_AS(plan::Planner(m, envs::TaskId::kBeamforming, bad),
                       doctest::Contains("guidance scale"), std::runtime_error);
  CHECK_THROWS_WITH_AS(plan::Planner(m, envs::TaskId::kSlicing, cfg),
                       doctest::Contains("not built"), std::runtime_error);
}

TEST_CASE("diverged sampling falls back to the scripted controller, counted") {
  const auto spec = small_cbf();
  auto m = awake_model(spec, 29);
  for (auto* p : m.params().with_prefix("unet.mid"))
    p->value.fill(1e30f);  // guarantees non-finite segments

  const nn::TensorF adj = chain_adjacency();
  util::Rng rng(3);
  const nn::TensorF obs = nn::TensorF::randn({4, spec.obs_dim()}, rng);

  plan::PlannerConfig cfg;
  cfg.guidance_scale = 0.0;
  cfg.seed = 1;
  plan::Planner p(m, envs::TaskId::kBeamforming, cfg);
  const nn::TensorF a = p.plan_step(obs, adj, 0);
  const nn::TensorF expert = envs::expert_actions(spec, obs);
  CHECK(a.raw() == expert.raw());
  CHECK(p.stats().fallbacks == 4);
  CHECK(p.stats().samples == 0);

  // No stale segment sneaks in: the next step falls back again.
  (void)p.plan_step(obs, adj, 1);
  CHECK(p.stats().fallbacks == 8);
}

TEST_CASE("episodes record every reward and replay exactly under one seed") {
  auto spec = small_cbf();
  spec.episode_len = 12;
  const plan::PlannerConfig cfg;

  const auto e1 = plan::run_episode(nullptr, spec, cfg, plan::Policy::kExpert, 7);
  const auto e2 = plan::run_episode(nullptr, spec, cfg, plan::Policy::kExpert, 7);
  const auto e3 = plan::run_episode(nullptr, spec, cfg, plan::Policy::kExpert, 8);
  CHECK(e1.rewards.size() == 12 * 4);
  CHECK(e1.num_agents == 4);
  CHECK(e1.steps == 12);
  CHECK(std::isfinite(e1.mean_reward));
  CHECK(e1.rewards == e2.rewards);
  CHECK(e1.rewards != e3.rewards);
  CHECK(e1.stats.decisions == 0);  // no planner involved

  const auto r1 = plan::run_episode(nullptr, spec, cfg, plan::Policy::kRandom, 7);
  CHECK(r1.rewards.size() == 12 * 4);
  CHECK(r1.rewards != e1.rewards);

  const std::string path = "/tmp/networld_episode_test.csv";
  plan::write_episode_csv(e1, path);
  const auto rows = util::read_csv(path);
  REQUIRE(rows.size() == 1 + 12 * 4);
  CHECK(rows[0] == std::vector<std::string>{"step", "agent", "reward"});
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][1] == "0");
  CHECK(rows[1][2] == util::csv_double(e1.rewards[0]));
  CHECK(rows.back()[0] == "11");
  CHECK(rows.back()[1] == "3");
  std::remove(path.c_str());

  CHECK_THROWS_WITH_AS(plan::run_episode(nullptr, spec, cfg, plan::Policy::kPlanner, 1),
                       doctest::Contains("needs a model"), std::runtime_error);
}

TEST_CASE("planner episodes run guided end to end and replay exactly") {
  auto spec = small_cbf();
  spec.episode_len = 5;
  auto m = awake_model(spec, 41);

  plan::PlannerConfig cfg;
  cfg.guidance_scale = 1.0;
  cfg.seed = 3;
  const auto e1 = plan::run_episode(&m, spec, cfg, plan::Policy::kPlanner, 11);
  const auto e2 = plan::run_episode(&m, spec, cfg, plan::Policy::kPlanner, 11);
  CHECK(e1.rewards.size() == 5 * 4);
  CHECK(e1.rewards == e2.rewards);
  CHECK(e1.mean_reward == e2.mean_reward);
  CHECK(e1.stats.decisions == 5);
  CHECK(e1.stats.samples == 5);
  CHECK(e1.stats.fallbacks == 0);
  CHECK(e1.ms_per_decision > 0.0);

  // A different stream salt changes the sampled plans and so the episode.
  plan::PlannerConfig salted = cfg;
  salted.seed = 4;
  const auto e3 = plan::run_episode(&m, spec, cfg, plan::Policy::kPlanner, 12);
  const auto e4 = plan::run_episode(&m, spec, salted, plan::Policy::kPlanner, 12);
  CHECK(e3.rewards != e4.rewards);
}

TEST_CASE("evaluation aggregates per-seed means with the sample deviation") {
  auto spec = small_cbf();
  spec.episode_len = 8;
  const plan::PlannerConfig cfg;

  const auto single =
      plan::evaluate(nullptr, spec, cfg, plan::Policy::kExpert, {5}, /*episodes_per_seed=*/2);
  REQUIRE(single.per_seed.size() == 1);
  CHECK(single.stddev == 0.0);
  CHECK(single.mean == single.per_seed[0]);
  REQUIRE(single.rows.size() == 2);
  CHECK(single.rows[0].seed == 5);
  CHECK(single.rows[1].episode == 1);
  CHECK(0.5 * (single.rows[0].mean_reward + single.rows[1].mean_reward) ==
        doctest::Approx(single.per_seed[0]).epsilon(1e-12));

  const auto twin = plan::evaluate(nullptr, spec, cfg, plan::Policy::kExpert, {5, 5}, 1);
  CHECK(twin.stddev == 0.0);

  const auto pair = plan::evaluate(nullptr, spec, cfg, plan::Policy::kExpert, {1, 2}, 1);
  REQUIRE(pair.per_seed.size() == 2);
  CHECK(pair.per_seed[0] != pair.per_seed[1]);
  CHECK(pair.stddev > 0.0);
  const double mid = 0.5 * (pair.per_seed[0] + pair.per_seed[1]);
  CHECK(std::abs(pair.mean - mid) < 1e-12);

  CHECK_THROWS_WITH_AS(plan::evaluate(nullptr, spec, cfg, plan::Policy::kExpert, {}, 1),
                       doctest::Contains("at least one seed"), std::runtime_error);
  CHECK_THROWS_WITH_AS(plan::evaluate(nullptr, spec, cfg, plan::Policy::kExpert, {1}, 0),
                       doctest::Contains("episodes per seed"), std::runtime_error);

  CHECK(plan::policy_name(plan::Policy::kPlanner) == "planner");
  CHECK(plan::policy_from_name("random") == plan::Policy::kRandom);
  CHECK_THROWS_WITH_AS(plan::policy_from_name("oracle"), doctest::Contains("unknown policy"),
                       std::runtime_error);
}

}  // TEST_SUITE
