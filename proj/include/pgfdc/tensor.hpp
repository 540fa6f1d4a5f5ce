#pragma once

#include <cmath>
#include <cstring>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgfdc/rng.hpp"

namespace pgfdc {

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

inline int shape_size(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

namespace detail {
struct TensorData {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a backward pass touches this tensor
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major float64 tensor. A Tensor is a shared handle: copies view the
// same storage, clone() deep-copies. Gradients live next to the values and are
// populated by Graph::backward for tensors with requires_grad set.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->value.assign(static_cast<std::size_t>(shape_size(shape)), 0.0);
    t.d_->shape = std::move(shape);
    return t;
  }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.d_->value) x = v;
    return t;
  }

  static Tensor of(std::vector<int> shape, std::vector<double> data) {
    if (static_cast<int>(data.size()) != shape_size(shape))
      throw std::invalid_argument("data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->value = std::move(data);
    return t;
  }

  static Tensor scalar(double v) { return of({1}, {v}); }

  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev = 1.0) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.d_->value) x = stddev * rng.normal();
    return t;
  }

  bool defined() const { return d_ != nullptr; }
  const std::vector<int>& shape() const { return d_->shape; }
  int ndim() const { return static_cast<int>(d_->shape.size()); }
  int dim(int i) const { return d_->shape[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(d_->value.size()); }

  // A Tensor is a handle: const-ness is shallow, storage stays mutable so
  // backward closures can fill gradients through captured copies.
  double* data() const { return d_->value.data(); }

  double item() const {
    if (size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
    return d_->value[0];
  }

  bool requires_grad() const { return d_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    d_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return !d_->grad.empty(); }
  double* grad() const { return d_->grad.data(); }

  void ensure_zero_grad() { d_->grad.assign(d_->value.size(), 0.0); }
  void drop_grad() {
    d_->grad.clear();
    d_->grad.shrink_to_fit();
  }

  Tensor clone() const {
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = d_->shape;
    t.d_->value = d_->value;
    t.d_->requires_grad = d_->requires_grad;
    return t;
  }

  void copy_values_from(const Tensor& other) {
    if (other.d_->value.size() != d_->value.size())
      throw std::invalid_argument("copy_values_from: size mismatch " + shape_str(shape()) +
                                  " vs " + shape_str(other.shape()));
    d_->value = other.d_->value;
  }

  bool all_finite() const {
    for (double x : d_->value)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return d_->shape == other.d_->shape; }

  // Identity of the underlying storage; used by the tape.
  const detail::TensorData* id() const { return d_.get(); }

 private:
  std::shared_ptr<detail::TensorData> d_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

// Stacks equally-shaped tensors along a new leading dimension.
inline Tensor stack(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("stack: empty input");
  std::vector<int> shape;
  shape.push_back(static_cast<int>(items.size()));
  for (int d : items[0].shape()) shape.push_back(d);
  Tensor out = Tensor::zeros(shape);
  const int n = items[0].size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    check_same_shape(items[i], items[0], "stack");
    std::memcpy(out.data() + static_cast<std::ptrdiff_t>(i) * n, items[i].data(),
                static_cast<std::size_t>(n) * sizeof(double));
  }
  return out;
}

}  // namespace pgfdc
