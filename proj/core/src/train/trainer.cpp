#include "networld/train/trainer.hpp"

#include <filesystem>
#include <memory>

#include "networld/diffusion/sampler.hpp"
#include "networld/util/csv.hpp"

namespace networld::train {

namespace {

double window_mean(const std::vector<StepStats>& steps, size_t begin, size_t end) {
  util::require(begin < end && end <= steps.size(), "bad stats window [", begin, ", ", end, ")");
  double acc = 0.0;
  for (size_t i = begin; i < end; ++i) acc += steps[i].total;
  return acc / static_cast<double>(end - begin);
}

}  // namespace

double RunReport::mean_head(size_t window) const { return window_mean(steps, 0, window); }

double RunReport::mean_tail(size_t window) const {
  return window_mean(steps, steps.size() - window, steps.size());
}

Trainer::Trainer(model::WorldModel<float>& m, const TrainConfig& cfg)
    : model_(m), cfg_(cfg), adam_(), rng_(util::Rng::derive(cfg.seed, {0x747261696eULL})) {
  util::require(cfg.batch_size > 0 && cfg.epochs > 0 && cfg.steps_per_epoch > 0,
                "batch size, epochs and steps per epoch must be positive");
  rebuild_optimizer(nullptr);
}

void Trainer::rebuild_optimizer(const envs::TaskId* target) {
  nn::AdamConfig ac;
  ac.lr = cfg_.lr;
  adam_ = nn::Adam<float>(ac);
  if (!target) {
    adam_.add_group(model_.params().all());
    return;
  }
  const std::string name = envs::task_name(*target);
  std::vector<nn::Parameter<float>*> fast, slow;
  for (auto* p : model_.params().all()) {
    const bool owned = p->name.rfind("enc." + name + ".", 0) == 0 ||
                       p->name.rfind("invdyn." + name + ".", 0) == 0;
    (owned ? fast : slow).push_back(p);
  }
  adam_.add_group(fast, 1.0);
  adam_.add_group(slow, cfg_.core_lr_scale);
}

void Trainer::add_data(const data::TrajectoryStore* store) {
  util::require(store != nullptr, "null dataset");
  model_.task_index(store->spec.task);  // throws if the model lacks this task
  const int H = static_cast<int>(model_.config().horizon);
  util::require(store->spec.episode_len + 1 >= H, "episodes have ", store->spec.episode_len + 1,
                " frames, shorter than the ", H, "-frame horizon");
  data_.push_back(store);
}

StepStats Trainer::step() {
  util::require(!data_.empty(), "no datasets added");
  const auto& ds = *data_[next_task_ % data_.size()];
  ++next_task_;
  return joint_step(ds);
}

StepStats Trainer::joint_step(const data::TrajectoryStore& ds) {
  const envs::TaskSpec& spec = ds.spec;
  const int A = spec.num_agents;
  const int T = spec.episode_len;
  const int obs_dim = spec.obs_dim();
  const int act_dim = spec.action_dim();
  const nn::Index H = model_.config().horizon;
  const nn::Index d = model_.config().latent_dim;
  const nn::Index B = cfg_.batch_size;
  const auto& ns = model_.schedule();

  // ---- draw the batch: (episode, agent, window start, diffusion step, transition)
  std::vector<int> ep(B), ag(B), t0(B), tstep(B), kk(B);
  for (nn::Index b = 0; b < B; ++b) {
    ep[b] = static_cast<int>(rng_.uniform_int(ds.num_episodes));
    ag[b] = static_cast<int>(rng_.uniform_int(A));
    t0[b] = static_cast<int>(rng_.uniform_int(T + 2 - static_cast<int>(H)));
    tstep[b] = 1 + static_cast<int>(rng_.uniform_int(ns.steps));
    kk[b] = static_cast<int>(rng_.uniform_int(H - 1));
  }

  // ---- raw material: every agent's observation over each sampled window
  nn::TensorF obs_rows({B * H * static_cast<nn::Index>(A), obs_dim});
  for (nn::Index b = 0; b < B; ++b)
    for (nn::Index h = 0; h < H; ++h)
      for (int j = 0; j < A; ++j)
        for (int x = 0; x < obs_dim; ++x)
          obs_rows.at((b * H + h) * A + j, x) =
              ds.obs_at(ep[b], t0[b] + static_cast<int>(h), j, x);
  obs_rows = codec::symlog_tensor(obs_rows);

  std::vector<nn::Index> local_idx(static_cast<size_t>(B * H));
  std::vector<nn::Index> mf_group(static_cast<size_t>(B * H * A), -1);
  nn::TensorF flag({B, 1, H});
  for (nn::Index b = 0; b < B; ++b) {
    int nbrs = 0;
    for (int j = 0; j < A; ++j)
      if (j != ag[b] && ds.adj_at(ep[b], ag[b], j) != 0.0f) ++nbrs;
    for (nn::Index h = 0; h < H; ++h) {
      local_idx[static_cast<size_t>(b * H + h)] = (b * H + h) * A + ag[b];
      for (int j = 0; j < A; ++j)
        if (j != ag[b] && ds.adj_at(ep[b], ag[b], j) != 0.0f)
          mf_group[static_cast<size_t>((b * H + h) * A + j)] = b * H + h;
      flag.at(b, 0, h) = nbrs > 0 ? 1.0f : 0.0f;
    }
  }

  nn::TensorF local_obs({B * H, obs_dim});
  for (nn::Index r = 0; r < B * H; ++r)
    for (int x = 0; x < obs_dim; ++x) local_obs.at(r, x) = obs_rows.at(local_idx[static_cast<size_t>(r)], x);

  nn::TensorF noise = nn::TensorF::randn({B, model_.config().channels(), H}, rng_);
  for (nn::Index b = 0; b < B; ++b)
    for (nn::Index c = 0; c < model_.config().channels(); ++c) noise.at(b, c, 0) = 0.0f;

  nn::TensorF actions({B, act_dim});
  std::vector<double> returns(static_cast<size_t>(B));
  std::vector<nn::Index> k0(static_cast<size_t>(B)), k1(static_cast<size_t>(B));
  for (nn::Index b = 0; b < B; ++b) {
    for (int x = 0; x < act_dim; ++x) actions.at(b, x) = ds.act_at(ep[b], t0[b] + kk[b], ag[b], x);
    returns[static_cast<size_t>(b)] = ds.return_to_go(ep[b], ag[b], t0[b], cfg_.gamma);
    k0[static_cast<size_t>(b)] = b * H + kk[b];
    k1[static_cast<size_t>(b)] = b * H + kk[b] + 1;
  }

  const std::vector<int> task_ids(static_cast<size_t>(B),
                                  model::WorldModel<float>::task_embed_id(spec.task));

  // ---- graph: encode, compose channels, noise, denoise, classify, decode
  nn::GraphF g;
  const auto& enc = model_.encoder(spec.task);
  const int z_all = enc.encode(g, g.constant(obs_rows));
  const int local_rows = g.gather_rows(z_all, local_idx);
  const int mf_rows = g.scatter_mean(z_all, std::move(mf_group), B * H);
  const int x0 = g.concat_chan(g.concat_chan(g.rows_to_chl(local_rows, B, H),
                                             g.rows_to_chl(mf_rows, B, H)),
                               g.constant(flag));

  const int xt = g.clamp_time0(diffusion::q_sample(g, x0, ns, tstep, noise), x0);
  const int loss_diff = g.mse(model_.unet().apply(g, xt, tstep, task_ids), noise);
  const int loss_clf =
      model_.classifier().loss(g, g.stopgrad(xt), tstep, task_ids, returns);
  const int loss_recon = g.mse(enc.reconstruct(g, local_rows), local_obs);
  const int pairs =
      g.concat_cols(g.gather_rows(local_rows, std::move(k0)), g.gather_rows(local_rows, std::move(k1)));
  const int loss_inv = model_.invdyn(spec.task).loss(g, pairs, actions);

  const int total = g.wsum({{loss_diff, 1.0},
                            {loss_clf, cfg_.clf_weight},
                            {loss_recon, cfg_.recon_weight},
                            {loss_inv, cfg_.invdyn_weight}});

  model_.params().zero_grads();
  g.backward(total);

  StepStats st;
  st.task = spec.task;
  st.total = g.value(total)[0];
  st.diffusion = g.value(loss_diff)[0];
  st.classifier = g.value(loss_clf)[0];
  st.recon = g.value(loss_recon)[0];
  st.invdyn = g.value(loss_inv)[0];
  st.applied = adam_.step();
  ++global_step_;
  return st;
}

RunReport Trainer::run(const std::string& tag) {
  util::require(!data_.empty(), "no datasets added");
  RunReport rep;
  std::unique_ptr<util::CsvWriter> csv;
  if (!cfg_.out_dir.empty()) {
    std::filesystem::create_directories(cfg_.out_dir);
    csv = std::make_unique<util::CsvWriter>(
        cfg_.out_dir + "/loss.csv",
        std::vector<std::string>{"step", "phase", "task", "total", "diffusion", "classifier",
                                 "recon", "invdyn", "applied"});
  }
  for (int e = 0; e < cfg_.epochs; ++e) {
    for (int s = 0; s < cfg_.steps_per_epoch; ++s) {
      const StepStats st = step();
      if (csv)
        csv->write_row({std::to_string(global_step_), tag, envs::task_name(st.task),
                        util::csv_double(st.total), util::csv_double(st.diffusion),
                        util::csv_double(st.classifier), util::csv_double(st.recon),
                        util::csv_double(st.invdyn), st.applied ? "1" : "0"});
      rep.steps.push_back(st);
    }
    if (!cfg_.out_dir.empty())
      model_.save(cfg_.out_dir + "/model_epoch" + std::to_string(e + 1) + ".ckpt");
  }
  if (!cfg_.out_dir.empty()) model_.save(cfg_.out_dir + "/model.ckpt");
  rep.skipped = adam_.skipped_steps();
  return rep;
}

RunReport Trainer::pretrain() {
  rebuild_optimizer(nullptr);
  return run("pretrain");
}

RunReport Trainer::finetune(envs::TaskId target) {
  model_.task_index(target);
  rebuild_optimizer(&target);
  return run("finetune");
}

}  // namespace networld::train
