#include "satpose/core/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (const int d : shape) {
    if (d < 0) throw ShapeError("negative dimension");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = numel_of(shape);
  return from_data(std::move(shape), std::vector<real>(static_cast<std::size_t>(n), real(0)),
                   requires_grad);
}

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  const auto n = numel_of(shape);
  return from_data(std::move(shape), std::vector<real>(static_cast<std::size_t>(n), value),
                   requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<real> values, bool requires_grad) {
  if (numel_of(shape) != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("from_data: " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

real Tensor::item() const {
  if (!node_ || node_->values.size() != 1) throw ShapeError("item: tensor is not scalar");
  return node_->values[0];
}

void Tensor::set_requires_grad(bool rg) {
  if (!node_) throw ShapeError("set_requires_grad on undefined tensor");
  if (!node_->leaf) throw NumericalError("set_requires_grad on non-leaf tensor");
  node_->requires_grad = rg;
}

std::span<real> Tensor::grad() {
  if (!node_) throw ShapeError("grad on undefined tensor");
  if (node_->grad.empty()) node_->grad.assign(node_->values.size(), real(0));
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) node_->grad.assign(node_->values.size(), real(0));
}

bool Tensor::has_nonfinite() const {
  for (const real v : node_->values) {
    if (!std::isfinite(static_cast<double>(v))) return true;
  }
  return false;
}

Tensor Tensor::clone_detached() const {
  return from_data(node_->shape, node_->values, false);
}

Tensor Tensor::make_op(Shape shape, std::vector<real> values, const std::vector<Tensor>& parents,
                       std::function<void(detail::Node&)> backward) {
  Tensor out = from_data(std::move(shape), std::move(values), false);
  if (!t_grad_enabled) return out;
  bool needs = false;
  for (const Tensor& p : parents) {
    if (p.defined() && p.requires_grad()) needs = true;
  }
  if (!needs) return out;
  out.node_->requires_grad = true;
  out.node_->leaf = false;
  for (const Tensor& p : parents) {
    if (p.defined() && p.requires_grad()) out.node_->parents.push_back(p.node_ptr());
  }
  out.node_->backward = std::move(backward);
  return out;
}

void backward(const Tensor& loss, std::span<const Tensor> params) {
  if (!loss.defined() || loss.numel() != 1) {
    throw NumericalError("backward: loss must be a defined scalar");
  }

  for (const Tensor& p : params) {
    Tensor t = p;
    if (t.defined()) t.grad();  // allocate; unreachable params keep zeros
  }
  if (!loss.requires_grad()) return;  // constant loss: nothing reachable

  // Deterministic topological order (parents after children in visit stack).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  struct Frame {
    detail::Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::Node* parent = f.node->parents[f.next_parent++].get();
      if (seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  // `order` is now children-after-parents; walk it from the back.

  for (detail::Node* node : order) {
    if (!node->leaf) {
      node->grad.assign(node->values.size(), real(0));
    } else if (node->grad.empty()) {
      node->grad.assign(node->values.size(), real(0));
    }
  }
  loss.node()->grad[0] += real(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward) node->backward(*node);
    if (!node->leaf) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

SATPOSE_NS_END
