#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "networld/nn/graph.hpp"
#include "networld/util/rng.hpp"

namespace networld::nn {

enum class Init { kFanInUniform, kZero, kNormal };

// Owns named parameters with stable addresses. Checkpoint IO and the
// optimizer both address parameters through this registry.
template <typename S>
class ParamStore {
 public:
  Parameter<S>& add(const std::string& name, const Shape& shape, util::Rng& rng,
                    Init init = Init::kFanInUniform, Index fan_in = 0, double normal_std = 0.02) {
    util::require(index_.find(name) == index_.end(), "duplicate parameter name: ", name);
    auto p = std::make_unique<Parameter<S>>();
    p->name = name;
    p->value = Tensor<S>(shape);
    p->grad = Tensor<S>(shape);
    switch (init) {
      case Init::kZero:
        break;
      case Init::kNormal:
        for (Index i = 0; i < p->value.numel(); ++i)
          p->value[i] = static_cast<S>(rng.normal(0.0, normal_std));
        break;
      case Init::kFanInUniform: {
        util::require(fan_in > 0, "fan_in required for parameter ", name);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Index i = 0; i < p->value.numel(); ++i)
          p->value[i] = static_cast<S>(rng.uniform(-bound, bound));
        break;
      }
    }
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<S>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  Parameter<S>& at(const std::string& name) {
    Parameter<S>* p = find(name);
    util::require(p != nullptr, "unknown parameter: ", name);
    return *p;
  }

  std::vector<Parameter<S>*> all() {
    std::vector<Parameter<S>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  // Parameters whose name starts with the given prefix, in registration order.
  std::vector<Parameter<S>*> with_prefix(const std::string& prefix) {
    std::vector<Parameter<S>*> out;
    for (auto& p : params_)
      if (p->name.rfind(prefix, 0) == 0) out.push_back(p.get());
    return out;
  }

  size_t count() const { return params_.size(); }

  Index total_numel() const {
    Index n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

 private:
  std::vector<std::unique_ptr<Parameter<S>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// ---- layer wrappers (thin: they register parameters and emit graph ops) ----

template <typename S>
struct Dense {
  Parameter<S>* W = nullptr;  // [out, in]
  Parameter<S>* b = nullptr;  // [out]

  Dense() = default;
  Dense(ParamStore<S>& ps, const std::string& name, Index in, Index out, util::Rng& rng,
        bool zero_init = false) {
    W = &ps.add(name + ".W", {out, in}, rng, zero_init ? Init::kZero : Init::kFanInUniform, in);
    b = &ps.add(name + ".b", {out}, rng, Init::kZero);
  }

  int apply(Graph<S>& g, int x) const { return g.add_rowvec(g.matmul_nt(x, g.param(*W)), g.param(*b)); }
};

template <typename S>
struct Conv1d {
  Parameter<S>* W = nullptr;  // [out_ch, in_ch, K]
  Parameter<S>* b = nullptr;  // [out_ch]
  int stride = 1;
  int pad = 0;

  Conv1d() = default;
  Conv1d(ParamStore<S>& ps, const std::string& name, Index in_ch, Index out_ch, Index kernel,
         int stride_, int pad_, util::Rng& rng, bool zero_init = false)
      : stride(stride_), pad(pad_) {
    W = &ps.add(name + ".W", {out_ch, in_ch, kernel}, rng,
                zero_init ? Init::kZero : Init::kFanInUniform, in_ch * kernel);
    b = &ps.add(name + ".b", {out_ch}, rng, Init::kZero);
  }

  int apply(Graph<S>& g, int x) const { return g.conv1d(x, g.param(*W), g.param(*b), stride, pad); }
};

template <typename S>
struct ConvT1d {
  Parameter<S>* W = nullptr;  // [in_ch, out_ch, K]
  Parameter<S>* b = nullptr;  // [out_ch]
  int stride = 1;
  int pad = 0;

  ConvT1d() = default;
  ConvT1d(ParamStore<S>& ps, const std::string& name, Index in_ch, Index out_ch, Index kernel,
          int stride_, int pad_, util::Rng& rng)
      : stride(stride_), pad(pad_) {
    W = &ps.add(name + ".W", {in_ch, out_ch, kernel}, rng, Init::kFanInUniform, in_ch * kernel);
    b = &ps.add(name + ".b", {out_ch}, rng, Init::kZero);
  }

  int apply(Graph<S>& g, int x) const {
    return g.conv1d_transpose(x, g.param(*W), g.param(*b), stride, pad);
  }
};

template <typename S>
struct GroupNorm {
  Parameter<S>* gamma = nullptr;
  Parameter<S>* beta = nullptr;
  int groups = 1;

  GroupNorm() = default;
  GroupNorm(ParamStore<S>& ps, const std::string& name, Index channels, int groups_, util::Rng& rng)
      : groups(groups_) {
    gamma = &ps.add(name + ".gamma", {channels}, rng, Init::kZero);
    gamma->value.fill(S(1));
    beta = &ps.add(name + ".beta", {channels}, rng, Init::kZero);
  }

  int apply(Graph<S>& g, int x) const {
    return g.group_norm(x, g.param(*gamma), g.param(*beta), groups);
  }
};

template <typename S>
struct Embedding {
  Parameter<S>* table = nullptr;  // [rows, dim]

  Embedding() = default;
  Embedding(ParamStore<S>& ps, const std::string& name, Index rows, Index dim, util::Rng& rng) {
    table = &ps.add(name + ".table", {rows, dim}, rng, Init::kNormal, 0, 0.1);
  }

  int apply(Graph<S>& g, const std::vector<int>& ids) const {
    return g.embed_rows(g.param(*table), ids);
  }
};

// Transformer-style sinusoidal position code for diffusion timesteps.
// Row i encodes t[i]; first half cosines, second half sines, with
// geometrically spaced frequencies.
template <typename S>
Tensor<S> sinusoidal_embedding(const std::vector<int>& t, Index dim, double max_period = 10000.0) {
  util::require(dim % 2 == 0, "sinusoidal embedding dim must be even, got ", dim);
  const Index half = dim / 2;
  Tensor<S> out({static_cast<Index>(t.size()), dim});
  for (size_t i = 0; i < t.size(); ++i) {
    for (Index j = 0; j < half; ++j) {
      const double freq = std::exp(-std::log(max_period) * static_cast<double>(j) /
                                   static_cast<double>(half));
      const double arg = static_cast<double>(t[i]) * freq;
      out.at(static_cast<Index>(i), j) = static_cast<S>(std::cos(arg));
      out.at(static_cast<Index>(i), half + j) = static_cast<S>(std::sin(arg));
    }
  }
  return out;
}

}  // namespace networld::nn
