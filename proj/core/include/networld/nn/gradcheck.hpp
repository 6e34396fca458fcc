#pragma once

#include <cmath>
#include <vector>

#include "networld/nn/tensor.hpp"
#include "networld/util/require.hpp"

namespace networld::nn {

// Central-difference validation of analytic gradients, in double precision.
//
// `f(compute_grad)` must evaluate the scalar loss from the parameters'
// current values; when compute_grad is true it must also accumulate
// gradients into Parameter::grad. Returns the maximum relative error
//   |analytic - numeric| / (|analytic| + |numeric| + 1e-12)
// over every element of every listed parameter. Throws if any evaluated
// loss is non-finite.
template <typename F>
double grad_check(F&& f, const std::vector<Parameter<double>*>& params, double eps = 1e-5) {
  for (Parameter<double>* p : params) p->zero_grad();
  const double base = f(true);
  util::require(std::isfinite(base), "grad_check: loss is non-finite (", base, ")");

  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (Parameter<double>* p : params) analytic.push_back(p->grad);

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>& p = *params[pi];
    for (Index i = 0; i < p.value.numel(); ++i) {
      const double keep = p.value[i];
      p.value[i] = keep + eps;
      const double lp = f(false);
      p.value[i] = keep - eps;
      const double lm = f(false);
      p.value[i] = keep;
      util::require(std::isfinite(lp) && std::isfinite(lm),
                    "grad_check: perturbed loss is non-finite at ", p.name, "[", i, "]");
      const double numeric = (lp - lm) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace networld::nn
