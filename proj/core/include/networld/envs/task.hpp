#pragma once

#include <cstdint>
#include <string>

#include "networld/nn/tensor.hpp"
#include "networld/util/kv.hpp"
#include "networld/util/require.hpp"

namespace networld::envs {

// The three surrogate radio-resource control tasks. The integer values feed
// the learned task-embedding table, so they are part of the on-disk format.
enum class TaskId : int {
  kBeamforming = 0,  // "cbf": cooperative downlink beamforming
  kScheduling = 1,   // "rb": shared resource-block scheduling
  kSlicing = 2,      // "ns": bandwidth slicing under a capacity pool
};

inline std::string task_name(TaskId t) {
  switch (t) {
    case TaskId::kBeamforming: return "cbf";
    case TaskId::kScheduling: return "rb";
    case TaskId::kSlicing: return "ns";
  }
  util::fail("unknown task id ", static_cast<int>(t));
}

inline TaskId task_from_name(const std::string& name) {
  if (name == "cbf") return TaskId::kBeamforming;
  if (name == "rb") return TaskId::kScheduling;
  if (name == "ns") return TaskId::kSlicing;
  util::fail("unknown task '", name, "' (expected cbf, rb, or ns)");
}

// Full description of one multi-agent task instance. Serializes to the
// key-value format so datasets and checkpoints can carry it.
struct TaskSpec {
  TaskId task = TaskId::kBeamforming;
  int num_agents = 12;
  int episode_len = 40;

  // beamforming: transmitter pairs with 2-antenna real-valued channels
  double cbf_power = 1600.0;         // max transmit power (linear, noise = 1)
  double cbf_cross_gain = 0.05;      // uniform cross-link attenuation
  double cbf_fading_rho = 0.95;      // AR(1) channel memory
  double cbf_interf_penalty = 0.002; // price on caused interference
  double cbf_comm_radius = 0.3;      // neighbor radius on the unit square

  // scheduling: K blocks shared by Poisson-arrival queues; the default load
  // (10 agents x 0.5/step vs 6 blocks) keeps queues stable but contended
  int rb_blocks = 6;
  double rb_arrival_rate = 0.5;
  int rb_arrival_cap = 3;
  int rb_queue_cap = 20;

  // slicing: log-OU demand against a shared capacity pool
  double ns_theta = 0.1;           // mean reversion
  double ns_mu_log = 5.0106352940962555;  // log(150) -> ~150 Mbps mean demand
  double ns_sigma = 0.25;          // per-step log-demand noise
  double ns_demand_cap = 1000.0;   // Mbps
  double ns_capacity = 1000.0;     // pool capacity, Mbps at full allocation
  double ns_bw_cost = 0.05;        // price per unit of granted share

  int obs_dim() const {
    switch (task) {
      case TaskId::kBeamforming: return 7;
      case TaskId::kScheduling: return 3;
      case TaskId::kSlicing: return 4;
    }
    util::fail("unknown task id");
  }

  int action_dim() const { return task == TaskId::kBeamforming ? 2 : 1; }

  // Scheduling actions are integer block requests; the others are continuous.
  bool discrete_actions() const { return task == TaskId::kScheduling; }

  double action_lo() const {
    switch (task) {
      case TaskId::kBeamforming: return -1.0;
      case TaskId::kScheduling: return 0.0;
      case TaskId::kSlicing: return 0.0;
    }
    util::fail("unknown task id");
  }

  double action_hi() const {
    switch (task) {
      case TaskId::kBeamforming: return 1.0;
      case TaskId::kScheduling: return static_cast<double>(rb_blocks);
      case TaskId::kSlicing: return 1.0;
    }
    util::fail("unknown task id");
  }

  util::KvDoc to_kv() const {
    util::KvDoc d;
    d.set("task", task_name(task));
    d.set("num_agents", num_agents);
    d.set("episode_len", episode_len);
    d.set("cbf_power", cbf_power);
    d.set("cbf_cross_gain", cbf_cross_gain);
    d.set("cbf_fading_rho", cbf_fading_rho);
    d.set("cbf_interf_penalty", cbf_interf_penalty);
    d.set("cbf_comm_radius", cbf_comm_radius);
    d.set("rb_blocks", rb_blocks);
    d.set("rb_arrival_rate", rb_arrival_rate);
    d.set("rb_arrival_cap", rb_arrival_cap);
    d.set("rb_queue_cap", rb_queue_cap);
    d.set("ns_theta", ns_theta);
    d.set("ns_mu_log", ns_mu_log);
    d.set("ns_sigma", ns_sigma);
    d.set("ns_demand_cap", ns_demand_cap);
    d.set("ns_capacity", ns_capacity);
    d.set("ns_bw_cost", ns_bw_cost);
    return d;
  }

  static TaskSpec from_kv(const util::KvDoc& d) {
    TaskSpec s;
    s.task = task_from_name(d.get_string("task"));
    s.num_agents = static_cast<int>(d.get_int("num_agents"));
    s.episode_len = static_cast<int>(d.get_int("episode_len"));
    s.cbf_power = d.get_double("cbf_power", s.cbf_power);
    s.cbf_cross_gain = d.get_double("cbf_cross_gain", s.cbf_cross_gain);
    s.cbf_fading_rho = d.get_double("cbf_fading_rho", s.cbf_fading_rho);
    s.cbf_interf_penalty = d.get_double("cbf_interf_penalty", s.cbf_interf_penalty);
    s.cbf_comm_radius = d.get_double("cbf_comm_radius", s.cbf_comm_radius);
    s.rb_blocks = static_cast<int>(d.get_int("rb_blocks", s.rb_blocks));
    s.rb_arrival_rate = d.get_double("rb_arrival_rate", s.rb_arrival_rate);
    s.rb_arrival_cap = static_cast<int>(d.get_int("rb_arrival_cap", s.rb_arrival_cap));
    s.rb_queue_cap = static_cast<int>(d.get_int("rb_queue_cap", s.rb_queue_cap));
    s.ns_theta = d.get_double("ns_theta", s.ns_theta);
    s.ns_mu_log = d.get_double("ns_mu_log", s.ns_mu_log);
    s.ns_sigma = d.get_double("ns_sigma", s.ns_sigma);
    s.ns_demand_cap = d.get_double("ns_demand_cap", s.ns_demand_cap);
    s.ns_capacity = d.get_double("ns_capacity", s.ns_capacity);
    s.ns_bw_cost = d.get_double("ns_bw_cost", s.ns_bw_cost);
    s.validate();
    return s;
  }

  void validate() const {
    util::require(num_agents >= 2, "need at least 2 agents, got ", num_agents);
    util::require(episode_len >= 2, "episode length must be >= 2, got ", episode_len);
    util::require(cbf_power > 0 && cbf_cross_gain >= 0 && cbf_fading_rho >= 0 &&
                      cbf_fading_rho < 1 && cbf_comm_radius > 0,
                  "invalid beamforming parameters");
    util::require(rb_blocks >= 1 && rb_arrival_rate > 0 && rb_arrival_cap >= 1 && rb_queue_cap >= 1,
                  "invalid scheduling parameters");
    util::require(ns_theta > 0 && ns_theta < 1 && ns_sigma >= 0 && ns_demand_cap > 0 &&
                      ns_capacity > 0,
                  "invalid slicing parameters");
  }
};

// Default instances sized so multi-agent contention is actually present.
inline TaskSpec make_task(const std::string& name) {
  TaskSpec s;
  s.task = task_from_name(name);
  switch (s.task) {
    case TaskId::kBeamforming: s.num_agents = 12; break;
    case TaskId::kScheduling: s.num_agents = 10; break;
    case TaskId::kSlicing: s.num_agents = 8; break;
  }
  s.validate();
  return s;
}

}  // namespace networld::envs
