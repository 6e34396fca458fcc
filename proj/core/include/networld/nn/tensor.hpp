#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "networld/util/require.hpp"
#include "networld/util/rng.hpp"

namespace networld::nn {

using Index = std::int64_t;
using Shape = std::vector<Index>;

inline Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense row-major tensor. Rank is dynamic; ranks 1..3 are what the
// networks here actually use ([n], [rows,cols], [batch,channels,length]).
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), S(0)) {
    for (Index d : shape_) util::require(d > 0, "tensor dimensions must be positive, got ", shape_str(shape_));
  }

  Tensor(Shape shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
    util::require(static_cast<Index>(data_.size()) == shape_numel(shape_), "tensor data size ", data_.size(),
                  " does not match shape ", shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, S v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  static Tensor randn(Shape shape, util::Rng& rng) {
    Tensor t(std::move(shape));
    for (S& x : t.data_) x = static_cast<S>(rng.normal());
    return t;
  }

  static Tensor uniform(Shape shape, S lo, S hi, util::Rng& rng) {
    Tensor t(std::move(shape));
    for (S& x : t.data_) x = static_cast<S>(rng.uniform(lo, hi));
    return t;
  }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  Index size(int i) const { return shape_[static_cast<size_t>(i)]; }
  Index numel() const { return static_cast<Index>(data_.size()); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::vector<S>& raw() { return data_; }
  const std::vector<S>& raw() const { return data_; }

  S& operator[](Index i) { return data_[static_cast<size_t>(i)]; }
  S operator[](Index i) const { return data_[static_cast<size_t>(i)]; }

  S& at(Index i) { return data_[static_cast<size_t>(i)]; }
  S& at(Index i, Index j) { return data_[static_cast<size_t>(i * shape_[1] + j)]; }
  S& at(Index i, Index j, Index k) { return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)]; }
  S at(Index i) const { return data_[static_cast<size_t>(i)]; }
  S at(Index i, Index j) const { return data_[static_cast<size_t>(i * shape_[1] + j)]; }
  S at(Index i, Index j, Index k) const { return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)]; }

  void fill(S v) {
    for (S& x : data_) x = v;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (S x : data_) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  // Reinterprets the buffer under a new shape with the same element count.
  Tensor reshaped(Shape shape) const {
    util::require(shape_numel(shape) == numel(), "cannot reshape ", shape_str(shape_), " to ", shape_str(shape));
    return Tensor(std::move(shape), data_);
  }

  template <typename T>
  Tensor<T> cast() const {
    std::vector<T> out(data_.size());
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
    return Tensor<T>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<S> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Named, trainable tensor with a gradient slot of matching shape.
template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<S> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(S(0)); }
};

}  // namespace networld::nn
