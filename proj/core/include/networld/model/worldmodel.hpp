#pragma once

#include <string>
#include <vector>

#include "networld/codec/encoder.hpp"
#include "networld/diffusion/schedule.hpp"
#include "networld/diffusion/unet.hpp"
#include "networld/envs/task.hpp"
#include "networld/guidance/classifier.hpp"
#include "networld/model/invdyn.hpp"
#include "networld/nn/checkpoint.hpp"

namespace networld::model {

// Channel layout of a latent segment [B, 2d+1, H]: rows [0,d) are the agent's
// own latent trajectory, rows [d,2d) the mean of its neighbors' latents, and
// row 2d a constant has-neighbors flag so "no neighbors" is distinguishable
// from "neighbors that average to zero".
inline nn::Index segment_channels(nn::Index latent_dim) { return 2 * latent_dim + 1; }

struct WorldModelConfig {
  nn::Index latent_dim = 16;
  nn::Index horizon = 16;
  nn::Index unet_base = 32;
  nn::Index clf_base = 32;
  nn::Index enc_hidden = 64;
  nn::Index invdyn_hidden = 64;
  nn::Index time_emb_dim = 32;
  nn::Index task_emb_dim = 16;
  nn::Index cond_hidden = 64;
  int groups = 8;
  int diffusion_steps = 100;
  double beta_lo = 1e-3;
  double beta_hi = 0.2;
  nn::Index return_bins = 65;
  double return_lo = -300.0;
  double return_hi = 300.0;
  std::vector<envs::TaskSpec> tasks;

  nn::Index channels() const { return segment_channels(latent_dim); }

  util::KvDoc to_kv() const {
    util::KvDoc d;
    d.set("model", "networld-worldmodel-v1");
    d.set("latent_dim", static_cast<std::int64_t>(latent_dim));
    d.set("horizon", static_cast<std::int64_t>(horizon));
    d.set("unet_base", static_cast<std::int64_t>(unet_base));
    d.set("clf_base", static_cast<std::int64_t>(clf_base));
    d.set("enc_hidden", static_cast<std::int64_t>(enc_hidden));
    d.set("invdyn_hidden", static_cast<std::int64_t>(invdyn_hidden));
    d.set("time_emb_dim", static_cast<std::int64_t>(time_emb_dim));
    d.set("task_emb_dim", static_cast<std::int64_t>(task_emb_dim));
    d.set("cond_hidden", static_cast<std::int64_t>(cond_hidden));
    d.set("groups", groups);
    d.set("diffusion_steps", diffusion_steps);
    d.set("beta_lo", beta_lo);
    d.set("beta_hi", beta_hi);
    d.set("return_bins", static_cast<std::int64_t>(return_bins));
    d.set("return_lo", return_lo);
    d.set("return_hi", return_hi);
    d.set("num_tasks", static_cast<std::int64_t>(tasks.size()));
    for (size_t i = 0; i < tasks.size(); ++i) {
      const std::string prefix = "task" + std::to_string(i) + ".";
      const util::KvDoc task_doc = tasks[i].to_kv();
      for (const auto& [k, v] : task_doc.items()) d.set(prefix + k, v);
    }
    return d;
  }

  static WorldModelConfig from_kv(const util::KvDoc& d) {
    util::require(d.get_string("model") == "networld-worldmodel-v1",
                  "unrecognized model tag '", d.get_string("model"), "'");
    WorldModelConfig c;
    c.latent_dim = d.get_int("latent_dim");
    c.horizon = d.get_int("horizon");
    c.unet_base = d.get_int("unet_base");
    c.clf_base = d.get_int("clf_base");
    c.enc_hidden = d.get_int("enc_hidden");
    c.invdyn_hidden = d.get_int("invdyn_hidden");
    c.time_emb_dim = d.get_int("time_emb_dim");
    c.task_emb_dim = d.get_int("task_emb_dim");
    c.cond_hidden = d.get_int("cond_hidden");
    c.groups = static_cast<int>(d.get_int("groups"));
    c.diffusion_steps = static_cast<int>(d.get_int("diffusion_steps"));
    c.beta_lo = d.get_double("beta_lo");
    c.beta_hi = d.get_double("beta_hi");
    c.return_bins = d.get_int("return_bins");
    c.return_lo = d.get_double("return_lo");
    c.return_hi = d.get_double("return_hi");
    const std::int64_t n = d.get_int("num_tasks");
    for (std::int64_t i = 0; i < n; ++i) {
      const std::string prefix = "task" + std::to_string(i) + ".";
      util::KvDoc sub;
      for (const auto& [k, v] : d.items())
        if (k.rfind(prefix, 0) == 0) sub.set(k.substr(prefix.size()), v);
      c.tasks.push_back(envs::TaskSpec::from_kv(sub));
    }
    return c;
  }
};

// All trainable pieces behind the planner: per-task observation encoders, a
// shared noise-predicting U-Net and return classifier (told apart by a task
// embedding), and per-task inverse-dynamics heads. One parameter store, one
// checkpoint file.
template <typename S>
class WorldModel {
 public:
  WorldModel() = default;

  WorldModel(WorldModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    util::require(!cfg_.tasks.empty(), "world model needs at least one task");
    util::require(cfg_.horizon >= 2, "horizon must be at least 2, got ", cfg_.horizon);
    schedule_ = diffusion::NoiseSchedule::make(cfg_.diffusion_steps, cfg_.beta_lo, cfg_.beta_hi);
    util::Rng rng(util::Rng::key(seed, {0x6d6f64656cULL}));

    for (const auto& spec : cfg_.tasks) {
      spec.validate();
      const std::string name = envs::task_name(spec.task);
      codec::EncoderConfig ec;
      ec.obs_dim = spec.obs_dim();
      ec.latent_dim = cfg_.latent_dim;
      ec.hidden = cfg_.enc_hidden;
      encoders_.emplace_back(params_, ec, rng, "enc." + name);
      InvDynConfig ic;
      ic.latent_dim = cfg_.latent_dim;
      ic.action_dim = spec.action_dim();
      ic.hidden = cfg_.invdyn_hidden;
      ic.discrete = spec.discrete_actions();
      ic.action_lo = spec.action_lo();
      ic.action_hi = spec.action_hi();
      invdyns_.emplace_back(params_, ic, rng, "invdyn." + name);
    }

    diffusion::UNetConfig uc;
    uc.channels = cfg_.channels();
    uc.base_width = cfg_.unet_base;
    uc.time_emb_dim = cfg_.time_emb_dim;
    uc.task_emb_dim = cfg_.task_emb_dim;
    uc.cond_hidden = cfg_.cond_hidden;
    uc.groups = cfg_.groups;
    unet_ = diffusion::TemporalUNet<S>(params_, uc, rng);

    guidance::ClassifierConfig cc;
    cc.channels = cfg_.channels();
    cc.base_width = cfg_.clf_base;
    cc.time_emb_dim = cfg_.time_emb_dim;
    cc.task_emb_dim = cfg_.task_emb_dim;
    cc.cond_hidden = cfg_.cond_hidden;
    cc.hidden = cfg_.invdyn_hidden;
    cc.groups = cfg_.groups;
    cc.bins = codec::BinGrid::make(cfg_.return_bins, cfg_.return_lo, cfg_.return_hi);
    classifier_ = guidance::ReturnClassifier<S>(params_, cc, rng);
  }

  const WorldModelConfig& config() const { return cfg_; }
  const diffusion::NoiseSchedule& schedule() const { return schedule_; }
  nn::ParamStore<S>& params() { return params_; }
  const nn::ParamStore<S>& params() const { return params_; }

  int task_index(envs::TaskId task) const {
    for (size_t i = 0; i < cfg_.tasks.size(); ++i)
      if (cfg_.tasks[i].task == task) return static_cast<int>(i);
    util::fail("model was not built for task '", envs::task_name(task), "'");
  }

  // Task embedding ids are the stable enum values, independent of which task
  // subset the model was built with.
  static int task_embed_id(envs::TaskId task) { return static_cast<int>(task); }

  const envs::TaskSpec& spec(envs::TaskId task) const {
    return cfg_.tasks[static_cast<size_t>(task_index(task))];
  }
  const codec::ScenarioEncoder<S>& encoder(envs::TaskId task) const {
    return encoders_[static_cast<size_t>(task_index(task))];
  }
  const InverseDynamics<S>& invdyn(envs::TaskId task) const {
    return invdyns_[static_cast<size_t>(task_index(task))];
  }
  const diffusion::TemporalUNet<S>& unet() const { return unet_; }
  const guidance::ReturnClassifier<S>& classifier() const { return classifier_; }

  void save(const std::string& path) { nn::save_checkpoint(params_, path, cfg_.to_kv()); }

  static WorldModel load(const std::string& path) {
    WorldModel m(WorldModelConfig::from_kv(nn::peek_checkpoint_meta(path)), /*seed=*/0);
    nn::load_checkpoint(m.params_, path);
    return m;
  }

 private:
  WorldModelConfig cfg_;
  nn::ParamStore<S> params_;
  diffusion::NoiseSchedule schedule_;
  std::vector<codec::ScenarioEncoder<S>> encoders_;
  std::vector<InverseDynamics<S>> invdyns_;
  diffusion::TemporalUNet<S> unet_;
  guidance::ReturnClassifier<S> classifier_;
};

using WorldModelF = WorldModel<float>;

}  // namespace networld::model
