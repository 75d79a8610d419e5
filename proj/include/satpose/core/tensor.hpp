#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "satpose/prec.hpp"

SATPOSE_NS_BEGIN

using Shape = std::vector<int>;

std::int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<real> values;
  std::vector<real> grad;  // empty until needed
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's grad into its parents' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

// Dense N-d array participating in a reverse-mode differentiation graph.
// Value-semantic handle; copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<real> values, bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->values.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }

  std::span<real> data() { return node_->values; }
  std::span<const real> data() const { return node_->values; }
  real item() const;  // throws unless scalar

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg);

  // Allocated (zero-filled) on first access.
  std::span<real> grad();
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  void zero_grad();

  bool has_nonfinite() const;

  // Deep copy of values; detached from the graph.
  Tensor clone_detached() const;

  detail::Node* node() const { return node_.get(); }
  std::shared_ptr<detail::Node> node_ptr() const { return node_; }

  // Graph-building entry point used by the op implementations. `parents`
  // should list the differentiable inputs; the node is created as non-leaf
  // with requires_grad when autograd is enabled and any parent needs it.
  static Tensor make_op(Shape shape, std::vector<real> values, const std::vector<Tensor>& parents,
                        std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Autograd mode. Ops built while disabled record no graph.
bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into leaf
// tensors; every tensor in `params` gets a grad buffer even when the loss
// does not reach it (those stay zero). Repeated calls without zero_grad
// accumulate exactly.
void backward(const Tensor& loss, std::span<const Tensor> params = {});

SATPOSE_NS_END
