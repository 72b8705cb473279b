#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vtreid::tensor {

using Shape = std::vector<int>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Image batches use NCHW.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  int dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // NCHW element access
  double& at(int n, int c, int h, int w);
  double at(int n, int c, int h, int w) const;

  void fill(double v);
  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Reverse-mode autodiff node. Leaves created with requires_grad are
// parameters; their grads accumulate until explicitly zeroed.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::size_t size() const { return node_->value.size(); }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  // Empty tensor when no gradient has reached this node.
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  // Same value, cut from the graph.
  Var detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend Var make_result(Tensor value, std::vector<Var> parents,
                         std::function<void(Node&)> backward_fn);
  std::shared_ptr<Node> node_;
};

Var parameter(Tensor value);
Var constant(Tensor value);

// Builds a graph node. backward_fn receives the node whose grad is filled
// and must accumulate into parents[i]->ensure_grad() for parents that
// require grad. Recording is skipped when grads are disabled or no parent
// requires one.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Seeds d(root)/d(root) = 1 (root must hold one element) and propagates.
void backward(const Var& root);

bool grad_enabled();

// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace vtreid::tensor
