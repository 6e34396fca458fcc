#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "networld/nn/tensor.hpp"

namespace networld::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled parameter groups (each group scales the base rate).
// A step where any gradient element is non-finite is skipped entirely and
// counted, leaving parameters and moments untouched.
template <typename S>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void add_group(const std::vector<Parameter<S>*>& params, double lr_scale = 1.0) {
    for (Parameter<S>* p : params) {
      Slot s;
      s.p = p;
      s.m = Tensor<S>(p->value.shape());
      s.v = Tensor<S>(p->value.shape());
      s.lr_scale = lr_scale;
      slots_.push_back(std::move(s));
    }
  }

  size_t tracked() const { return slots_.size(); }

  bool step() {
    for (const Slot& s : slots_) {
      if (!s.p->grad.all_finite()) {
        ++skipped_;
        return false;
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Slot& s : slots_) {
      const double lr = cfg_.lr * s.lr_scale;
      const Index n = s.p->value.numel();
      for (Index i = 0; i < n; ++i) {
        const double g = static_cast<double>(s.p->grad[i]);
        const double m = cfg_.beta1 * static_cast<double>(s.m[i]) + (1.0 - cfg_.beta1) * g;
        const double v = cfg_.beta2 * static_cast<double>(s.v[i]) + (1.0 - cfg_.beta2) * g * g;
        s.m[i] = static_cast<S>(m);
        s.v[i] = static_cast<S>(v);
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        s.p->value[i] =
            static_cast<S>(static_cast<double>(s.p->value[i]) - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
    return true;
  }

  void zero_grads() {
    for (Slot& s : slots_) s.p->zero_grad();
  }

  int64_t applied_steps() const { return t_; }
  int64_t skipped_steps() const { return skipped_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    Parameter<S>* p = nullptr;
    Tensor<S> m, v;
    double lr_scale = 1.0;
  };

  AdamConfig cfg_;
  std::vector<Slot> slots_;
  int64_t t_ = 0;
  int64_t skipped_ = 0;
};

}  // namespace networld::nn
