#include "networld/envs/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace networld::envs {

namespace {

// Roles keep the independent noise purposes of one agent/pair from sharing a
// stream.
constexpr std::uint64_t kRolePosition = 1;
constexpr std::uint64_t kRoleChannel = 2;
constexpr std::uint64_t kRoleArrival = 3;
constexpr std::uint64_t kRoleTiebreak = 4;
constexpr std::uint64_t kRoleDemand = 5;

// Fresh generator for (entity key, purpose, transition index). Streams are
// a pure function of these coordinates: no draw-order coupling between
// agents, steps, or callers.
util::Rng noise_stream(std::uint64_t key, std::uint64_t role, std::int64_t t) {
  return util::Rng(util::Rng::mix(key ^ util::Rng::mix(role) ^
                                  util::Rng::mix(static_cast<std::uint64_t>(t + 1))));
}

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

EnvState Env::reset(std::uint64_t seed) const {
  EnvState s;
  s.task = spec_.task;
  s.num_agents = spec_.num_agents;
  s.step_count = 0;
  const int A = s.num_agents;
  const auto tid = static_cast<std::uint64_t>(spec_.task);
  s.agent_keys.resize(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i)
    s.agent_keys[static_cast<size_t>(i)] = util::Rng::key(seed, {tid, 11, static_cast<std::uint64_t>(i)});
  s.adj.assign(static_cast<size_t>(A) * static_cast<size_t>(A), 0);

  switch (spec_.task) {
    case TaskId::kBeamforming: reset_beamforming(s, seed); break;
    case TaskId::kScheduling: reset_scheduling(s, seed); break;
    case TaskId::kSlicing: reset_slicing(s, seed); break;
  }
  return s;
}

void Env::reset_beamforming(EnvState& s, std::uint64_t seed) const {
  const int A = s.num_agents;
  const auto tid = static_cast<std::uint64_t>(spec_.task);
  s.pair_keys.resize(static_cast<size_t>(A) * static_cast<size_t>(A));
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j)
      s.pair_keys[static_cast<size_t>(i * A + j)] =
          util::Rng::key(seed, {tid, 22, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});

  // transmitters scattered on the unit square; neighbors within the radius
  std::vector<double> pos(static_cast<size_t>(A) * 2);
  for (int i = 0; i < A; ++i) {
    util::Rng r = noise_stream(s.agent_keys[static_cast<size_t>(i)], kRolePosition, 0);
    pos[static_cast<size_t>(i) * 2] = r.uniform();
    pos[static_cast<size_t>(i) * 2 + 1] = r.uniform();
  }
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) {
      if (i == j) continue;
      const double dx = pos[static_cast<size_t>(i) * 2] - pos[static_cast<size_t>(j) * 2];
      const double dy = pos[static_cast<size_t>(i) * 2 + 1] - pos[static_cast<size_t>(j) * 2 + 1];
      s.adj[static_cast<size_t>(i * A + j)] =
          (std::sqrt(dx * dx + dy * dy) <= spec_.cbf_comm_radius) ? 1 : 0;
    }

  // stationary unit-variance channels
  s.chan.resize(static_cast<size_t>(A) * static_cast<size_t>(A) * 2);
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) {
      util::Rng r = noise_stream(s.pair_keys[static_cast<size_t>(i * A + j)], kRoleChannel, 0);
      s.chan[static_cast<size_t>(i * A + j) * 2] = r.normal();
      s.chan[static_cast<size_t>(i * A + j) * 2 + 1] = r.normal();
    }
  s.last_rate.assign(static_cast<size_t>(A), 0.0);
  s.last_caused.assign(static_cast<size_t>(A), 0.0);
  s.last_incoming.assign(static_cast<size_t>(A), 0.0);
  s.last_power.assign(static_cast<size_t>(A), 0.0);
}

void Env::reset_scheduling(EnvState& s, std::uint64_t /*seed*/) const {
  const int A = s.num_agents;
  // everyone competes for the same block pool
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j)
      if (i != j) s.adj[static_cast<size_t>(i * A + j)] = 1;

  s.queue.resize(static_cast<size_t>(A));
  s.last_arrivals.resize(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i) {
    util::Rng r = noise_stream(s.agent_keys[static_cast<size_t>(i)], kRoleArrival, 0);
    const int n = std::min(spec_.rb_arrival_cap, r.poisson(spec_.rb_arrival_rate));
    s.queue[static_cast<size_t>(i)] = n;
    s.last_arrivals[static_cast<size_t>(i)] = n;
  }
  s.last_grant.assign(static_cast<size_t>(A), 0.0);
}

void Env::reset_slicing(EnvState& s, std::uint64_t /*seed*/) const {
  const int A = s.num_agents;
  // ring-of-slices topology, fixed at reset and carried in the state
  for (int i = 0; i < A; ++i) {
    s.adj[static_cast<size_t>(i * A + (i + 1) % A)] = 1;
    s.adj[static_cast<size_t>(((i + 1) % A) * A + i)] = 1;
  }

  const double stat_std = spec_.ns_sigma / std::sqrt(spec_.ns_theta * (2.0 - spec_.ns_theta));
  s.log_demand.resize(static_cast<size_t>(A));
  s.demand.resize(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i) {
    util::Rng r = noise_stream(s.agent_keys[static_cast<size_t>(i)], kRoleDemand, 0);
    s.log_demand[static_cast<size_t>(i)] = spec_.ns_mu_log + stat_std * r.normal();
    s.demand[static_cast<size_t>(i)] =
        clampd(std::exp(s.log_demand[static_cast<size_t>(i)]), 0.0, spec_.ns_demand_cap);
  }
  s.prev_demand = s.demand;
  s.served_prev.assign(static_cast<size_t>(A), 0.0);
  s.last_share.assign(static_cast<size_t>(A), 0.0);
}

nn::TensorF Env::obs(const EnvState& s) const {
  const int A = s.num_agents;
  nn::TensorF out({A, spec_.obs_dim()});
  switch (spec_.task) {
    case TaskId::kBeamforming:
      for (int i = 0; i < A; ++i) {
        const size_t ii = static_cast<size_t>(i * A + i) * 2;
        const double h0 = s.chan[ii], h1 = s.chan[ii + 1];
        out.at(i, 0) = static_cast<float>(h0);
        out.at(i, 1) = static_cast<float>(h1);
        out.at(i, 2) = static_cast<float>(std::sqrt(h0 * h0 + h1 * h1));
        out.at(i, 3) = static_cast<float>(s.last_rate[static_cast<size_t>(i)]);
        out.at(i, 4) = static_cast<float>(s.last_caused[static_cast<size_t>(i)]);
        out.at(i, 5) = static_cast<float>(s.last_incoming[static_cast<size_t>(i)]);
        out.at(i, 6) = static_cast<float>(s.last_power[static_cast<size_t>(i)]);
      }
      break;
    case TaskId::kScheduling:
      for (int i = 0; i < A; ++i) {
        out.at(i, 0) = static_cast<float>(s.queue[static_cast<size_t>(i)]);
        out.at(i, 1) = static_cast<float>(s.last_arrivals[static_cast<size_t>(i)]);
        out.at(i, 2) = static_cast<float>(s.last_grant[static_cast<size_t>(i)]);
      }
      break;
    case TaskId::kSlicing:
      for (int i = 0; i < A; ++i) {
        out.at(i, 0) = static_cast<float>(s.demand[static_cast<size_t>(i)]);
        out.at(i, 1) = static_cast<float>(s.prev_demand[static_cast<size_t>(i)]);
        out.at(i, 2) = static_cast<float>(s.served_prev[static_cast<size_t>(i)]);
        out.at(i, 3) = static_cast<float>(s.last_share[static_cast<size_t>(i)]);
      }
      break;
  }
  return out;
}

nn::TensorF Env::adjacency(const EnvState& s) const {
  const int A = s.num_agents;
  nn::TensorF out({A, A});
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) out.at(i, j) = static_cast<float>(s.adj[static_cast<size_t>(i * A + j)]);
  return out;
}

std::vector<float> Env::step(EnvState& s, const nn::TensorF& actions) const {
  util::require(s.task == spec_.task && s.num_agents == spec_.num_agents,
                "state does not belong to this task instance");
  util::require(actions.ndim() == 2 && actions.size(0) == s.num_agents &&
                    actions.size(1) == spec_.action_dim(),
                "joint action must be [", s.num_agents, ",", spec_.action_dim(), "], got ",
                nn::shape_str(actions.shape()));
  switch (spec_.task) {
    case TaskId::kBeamforming: return step_beamforming(s, actions);
    case TaskId::kScheduling: return step_scheduling(s, actions);
    case TaskId::kSlicing: return step_slicing(s, actions);
  }
  util::fail("unknown task id");
}

std::vector<float> Env::step_beamforming(EnvState& s, const nn::TensorF& actions) const {
  const int A = s.num_agents;
  const double sqrtP = std::sqrt(spec_.cbf_power);
  const double g = spec_.cbf_cross_gain;

  // beam weights: clamped action direction, norm capped at 1
  std::vector<double> w(static_cast<size_t>(A) * 2);
  std::vector<double> power(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i) {
    double a0 = clampd(actions.at(i, 0), -1.0, 1.0);
    double a1 = clampd(actions.at(i, 1), -1.0, 1.0);
    const double n = std::sqrt(a0 * a0 + a1 * a1);
    if (n > 1.0) {
      a0 /= n;
      a1 /= n;
    }
    w[static_cast<size_t>(i) * 2] = sqrtP * a0;
    w[static_cast<size_t>(i) * 2 + 1] = sqrtP * a1;
    power[static_cast<size_t>(i)] = std::min(n, 1.0);
  }

  // received amplitude of transmitter j at receiver i
  std::vector<double> dot(static_cast<size_t>(A) * static_cast<size_t>(A));
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) {
      const size_t ij = static_cast<size_t>(i * A + j);
      dot[ij] = s.chan[ij * 2] * w[static_cast<size_t>(j) * 2] +
                s.chan[ij * 2 + 1] * w[static_cast<size_t>(j) * 2 + 1];
    }

  std::vector<float> reward(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i) {
    const double signal = dot[static_cast<size_t>(i * A + i)] * dot[static_cast<size_t>(i * A + i)];
    double incoming = 0.0, caused = 0.0;
    for (int j = 0; j < A; ++j) {
      if (j == i) continue;
      incoming += g * dot[static_cast<size_t>(i * A + j)] * dot[static_cast<size_t>(i * A + j)];
      caused += g * dot[static_cast<size_t>(j * A + i)] * dot[static_cast<size_t>(j * A + i)];
    }
    const double sinr = signal / (1.0 + incoming);
    const double rate = std::log2(1.0 + sinr);
    reward[static_cast<size_t>(i)] = static_cast<float>(rate - spec_.cbf_interf_penalty * caused);
    s.last_rate[static_cast<size_t>(i)] = rate;
    s.last_caused[static_cast<size_t>(i)] = caused;
    s.last_incoming[static_cast<size_t>(i)] = incoming;
    s.last_power[static_cast<size_t>(i)] = power[static_cast<size_t>(i)];
  }

  // AR(1) fading toward the unit-variance stationary distribution
  const double rho = spec_.cbf_fading_rho;
  const double diff = std::sqrt(1.0 - rho * rho);
  const std::int64_t t = s.step_count + 1;
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) {
      util::Rng r = noise_stream(s.pair_keys[static_cast<size_t>(i * A + j)], kRoleChannel, t);
      const size_t ij = static_cast<size_t>(i * A + j) * 2;
      s.chan[ij] = rho * s.chan[ij] + diff * r.normal();
      s.chan[ij + 1] = rho * s.chan[ij + 1] + diff * r.normal();
    }
  ++s.step_count;
  return reward;
}

std::vector<float> Env::step_scheduling(EnvState& s, const nn::TensorF& actions) const {
  const int A = s.num_agents;
  const int K = spec_.rb_blocks;
  const std::int64_t t = s.step_count + 1;

  std::vector<long long> req(static_cast<size_t>(A));
  long long total = 0;
  for (int i = 0; i < A; ++i) {
    const double a = clampd(std::round(actions.at(i, 0)), 0.0, static_cast<double>(K));
    req[static_cast<size_t>(i)] = static_cast<long long>(a);
    total += req[static_cast<size_t>(i)];
  }

  // integer proportional grants by largest remainder; ties resolved by a
  // per-agent keyed draw so the rule has no preferred agent slot
  std::vector<long long> grant(static_cast<size_t>(A), 0);
  if (total <= K) {
    grant = req;
  } else {
    struct Cand {
      long long rem;
      std::uint64_t tb;
      int idx;
    };
    std::vector<Cand> cands;
    long long left = K;
    for (int i = 0; i < A; ++i) {
      const long long num = static_cast<long long>(K) * req[static_cast<size_t>(i)];
      grant[static_cast<size_t>(i)] = num / total;
      left -= grant[static_cast<size_t>(i)];
      const long long rem = num % total;
      if (rem > 0) {
        util::Rng r = noise_stream(s.agent_keys[static_cast<size_t>(i)], kRoleTiebreak, t);
        cands.push_back({rem, r.next_u64(), i});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.rem != b.rem) return a.rem > b.rem;
      if (a.tb != b.tb) return a.tb > b.tb;
      return a.idx < b.idx;
    });
    for (size_t c = 0; c < cands.size() && left > 0; ++c, --left)
      ++grant[static_cast<size_t>(cands[c].idx)];
  }

  std::vector<float> reward(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i) {
    const size_t si = static_cast<size_t>(i);
    const double served = std::min(s.queue[si], static_cast<double>(grant[si]));
    util::Rng r = noise_stream(s.agent_keys[si], kRoleArrival, t);
    const int arrivals = std::min(spec_.rb_arrival_cap, r.poisson(spec_.rb_arrival_rate));
    s.queue[si] = std::min(s.queue[si] - served + arrivals, static_cast<double>(spec_.rb_queue_cap));
    s.last_arrivals[si] = arrivals;
    s.last_grant[si] = static_cast<double>(grant[si]);
    reward[si] = static_cast<float>(-s.queue[si] / 10.0);
  }
  ++s.step_count;
  return reward;
}

std::vector<float> Env::step_slicing(EnvState& s, const nn::TensorF& actions) const {
  const int A = s.num_agents;
  const std::int64_t t = s.step_count + 1;

  std::vector<double> share(static_cast<size_t>(A));
  double total = 0.0;
  for (int i = 0; i < A; ++i) {
    share[static_cast<size_t>(i)] = clampd(actions.at(i, 0), 0.0, 1.0);
    total += share[static_cast<size_t>(i)];
  }
  const double scale = total > 1.0 ? 1.0 / total : 1.0;

  std::vector<float> reward(static_cast<size_t>(A));
  for (int i = 0; i < A; ++i) {
    const size_t si = static_cast<size_t>(i);
    const double granted = share[si] * scale;
    const double rate = spec_.ns_capacity * granted;
    const double served = std::min(s.demand[si], rate);
    reward[si] = static_cast<float>(served / std::max(s.demand[si], 1.0) - spec_.ns_bw_cost * granted);

    s.prev_demand[si] = s.demand[si];
    s.served_prev[si] = served;
    s.last_share[si] = granted;

    util::Rng r = noise_stream(s.agent_keys[si], kRoleDemand, t);
    s.log_demand[si] += spec_.ns_theta * (spec_.ns_mu_log - s.log_demand[si]) + spec_.ns_sigma * r.normal();
    s.demand[si] = clampd(std::exp(s.log_demand[si]), 0.0, spec_.ns_demand_cap);
  }
  ++s.step_count;
  return reward;
}

nn::TensorF expert_actions(const TaskSpec& spec, const nn::TensorF& obs) {
  const int A = static_cast<int>(obs.size(0));
  util::require(obs.ndim() == 2 && obs.size(1) == spec.obs_dim(), "expert: bad observation shape ",
                nn::shape_str(obs.shape()));
  nn::TensorF out({A, spec.action_dim()});
  switch (spec.task) {
    case TaskId::kBeamforming:
      // matched-filter beam along the own channel, fixed 0.9 power backoff
      for (int i = 0; i < A; ++i) {
        const double h0 = obs.at(i, 0), h1 = obs.at(i, 1);
        const double n = std::sqrt(h0 * h0 + h1 * h1);
        out.at(i, 0) = n > 1e-9 ? static_cast<float>(0.9 * h0 / n) : 0.0f;
        out.at(i, 1) = n > 1e-9 ? static_cast<float>(0.9 * h1 / n) : 0.0f;
      }
      break;
    case TaskId::kScheduling:
      // ask for exactly the backlog, up to the pool size
      for (int i = 0; i < A; ++i)
        out.at(i, 0) = static_cast<float>(
            std::min(std::round(static_cast<double>(obs.at(i, 0))), static_cast<double>(spec.rb_blocks)));
      break;
    case TaskId::kSlicing:
      // request the demand's capacity share with a 5% over-ask margin
      for (int i = 0; i < A; ++i)
        out.at(i, 0) =
            static_cast<float>(clampd(1.05 * obs.at(i, 0) / spec.ns_capacity, 0.0, 1.0));
      break;
  }
  return out;
}

nn::TensorF random_actions(const TaskSpec& spec, util::Rng& rng) {
  nn::TensorF out({spec.num_agents, spec.action_dim()});
  for (int i = 0; i < spec.num_agents; ++i) {
    switch (spec.task) {
      case TaskId::kBeamforming:
        out.at(i, 0) = static_cast<float>(rng.uniform(-1.0, 1.0));
        out.at(i, 1) = static_cast<float>(rng.uniform(-1.0, 1.0));
        break;
      case TaskId::kScheduling:
        out.at(i, 0) = static_cast<float>(rng.uniform_int(spec.rb_blocks + 1));
        break;
      case TaskId::kSlicing:
        out.at(i, 0) = static_cast<float>(rng.uniform());
        break;
    }
  }
  return out;
}

namespace {

void permute_per_agent(std::vector<double>& v, const std::vector<int>& perm) {
  if (v.empty()) return;
  std::vector<double> out(v.size());
  for (size_t i = 0; i < perm.size(); ++i) out[i] = v[static_cast<size_t>(perm[i])];
  v = std::move(out);
}

}  // namespace

EnvState permuted(const EnvState& s, const std::vector<int>& perm) {
  const int A = s.num_agents;
  util::require(static_cast<int>(perm.size()) == A, "permutation has ", perm.size(),
                " entries for ", A, " agents");
  std::vector<bool> seen(static_cast<size_t>(A), false);
  for (int p : perm) {
    util::require(p >= 0 && p < A && !seen[static_cast<size_t>(p)], "not a permutation of 0..",
                  A - 1);
    seen[static_cast<size_t>(p)] = true;
  }

  EnvState out = s;
  for (int i = 0; i < A; ++i)
    out.agent_keys[static_cast<size_t>(i)] = s.agent_keys[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) {
      const size_t dst = static_cast<size_t>(i * A + j);
      const size_t src = static_cast<size_t>(perm[static_cast<size_t>(i)] * A + perm[static_cast<size_t>(j)]);
      out.adj[dst] = s.adj[src];
      if (!s.pair_keys.empty()) out.pair_keys[dst] = s.pair_keys[src];
      if (!s.chan.empty()) {
        out.chan[dst * 2] = s.chan[src * 2];
        out.chan[dst * 2 + 1] = s.chan[src * 2 + 1];
      }
    }

  permute_per_agent(out.last_rate, perm);
  permute_per_agent(out.last_caused, perm);
  permute_per_agent(out.last_incoming, perm);
  permute_per_agent(out.last_power, perm);
  permute_per_agent(out.queue, perm);
  permute_per_agent(out.last_arrivals, perm);
  permute_per_agent(out.last_grant, perm);
  permute_per_agent(out.log_demand, perm);
  permute_per_agent(out.demand, perm);
  permute_per_agent(out.prev_demand, perm);
  permute_per_agent(out.served_prev, perm);
  permute_per_agent(out.last_share, perm);
  return out;
}

}  // namespace networld::envs
