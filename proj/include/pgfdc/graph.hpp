#pragma once

#include <functional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "pgfdc/tensor.hpp"

namespace pgfdc {

// Reverse-mode tape. Ops record a backward closure per node as they execute;
// backward(loss) replays the closures in reverse. A graph is single-use:
// after backward it refuses further recording. Passing a null Graph* to ops
// runs them in inference mode (no recording, no grad buffers).
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  void record(Tensor output, std::vector<Tensor> inputs, std::function<void()> backward_fn) {
    if (consumed_)
      throw std::logic_error("graph already consumed by backward(); build a new graph");
    touch(output);
    for (Tensor& t : inputs) touch(t);
    nodes_.push_back(Node{std::move(backward_fn)});
    outputs_.insert(output.id());
  }

  // Seeds d(loss)/d(loss) = 1 and runs all recorded closures newest-first.
  void backward(const Tensor& loss) {
    if (consumed_) throw std::logic_error("backward() called twice on one graph");
    if (loss.size() != 1)
      throw std::invalid_argument("backward() expects a scalar loss, got shape " +
                                  shape_str(loss.shape()));
    if (outputs_.find(loss.id()) == outputs_.end())
      throw std::logic_error("backward() loss was not produced on this graph");
    consumed_ = true;
    for (Tensor& t : touched_) t.ensure_zero_grad();
    // ensure_zero_grad above cleared the seed too, so set it after.
    loss.grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward_fn();
    // Intermediate grads are scratch space; keep only parameter grads.
    for (Tensor& t : touched_)
      if (!t.requires_grad()) t.drop_grad();
  }

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::function<void()> backward_fn;
  };

  void touch(Tensor& t) {
    if (seen_.insert(t.id()).second) touched_.push_back(t);
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> touched_;
  std::unordered_set<const detail::TensorData*> seen_;
  std::unordered_set<const detail::TensorData*> outputs_;
  bool consumed_ = false;
};

}  // namespace pgfdc
