// SPDX-License-Identifier: Apache-2.0
#include "hig/core/diff_array.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace hig {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

DiffArray DiffArray::constant(Shape shape, std::vector<Real> values) {
  if (shape_numel(shape) != values.size())
    throw Error("value count " + std::to_string(values.size()) + " does not match shape " +
                shape_string(shape));
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return DiffArray(std::move(node));
}

DiffArray DiffArray::zeros(Shape shape) { return full(std::move(shape), Real(0)); }

DiffArray DiffArray::full(Shape shape, Real value) {
  const auto n = shape_numel(shape);
  return constant(std::move(shape), std::vector<Real>(n, value));
}

DiffArray DiffArray::scalar(Real value) { return constant({1}, {value}); }

DiffArray DiffArray::parameter(Shape shape, std::vector<Real> values) {
  auto p = constant(std::move(shape), std::move(values));
  p.node_->requires_grad = true;
  return p;
}

const Shape& DiffArray::shape() const {
  if (!node_) throw Error("undefined array");
  return node_->shape;
}

std::size_t DiffArray::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw Error("axis out of range for shape " + shape_string(s));
  return s[axis];
}

std::size_t DiffArray::numel() const { return node_ ? node_->value.size() : 0; }

std::span<const Real> DiffArray::values() const {
  if (!node_) throw Error("undefined array");
  return node_->value;
}

std::span<Real> DiffArray::mutable_values() {
  if (!node_) throw Error("undefined array");
  return node_->value;
}

Real DiffArray::item() const {
  if (numel() != 1) throw Error("item() on array of shape " + shape_string(shape()));
  return node_->value[0];
}

bool DiffArray::requires_grad() const { return node_ && node_->requires_grad; }

void DiffArray::set_requires_grad(bool flag) {
  if (!node_) throw Error("undefined array");
  if (node_->recorded) throw Error("requires_grad can only be changed on leaves");
  node_->requires_grad = flag;
}

bool DiffArray::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const Real> DiffArray::grad() const {
  if (!has_grad()) throw Error("gradient requested before a backward pass");
  return node_->grad;
}

std::span<Real> DiffArray::mutable_grad() {
  if (!node_) throw Error("undefined array");
  return node_->grad_buffer();
}

void DiffArray::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

DiffArray DiffArray::detach() const { return constant(shape(), node_->value); }

DiffArray DiffArray::reshape(Shape new_shape) const {
  if (shape_numel(new_shape) != numel())
    throw Error("cannot reshape " + shape_string(shape()) + " to " + shape_string(new_shape));
  return record("reshape", std::move(new_shape), node_->value, {*this}, [](detail::Node& out) {
    auto& in = *out.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
  });
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace {

template <class Range>
DiffArray record_impl(std::string op, Shape shape, std::vector<Real> values, const Range& inputs,
                      std::function<void(detail::Node&)> backward) {
  if (shape_numel(shape) != values.size())
    throw Error(op + ": output size does not match shape " + shape_string(shape));
  for (Real v : values) {
    if (!std::isfinite(v)) throw Error(op + ": non-finite value in output");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = std::move(op);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->recorded = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return DiffArray(std::move(node));
}

}  // namespace

DiffArray record(std::string op, Shape shape, std::vector<Real> values,
                 std::initializer_list<DiffArray> inputs,
                 std::function<void(detail::Node&)> backward) {
  return record_impl(std::move(op), std::move(shape), std::move(values), inputs,
                     std::move(backward));
}

DiffArray record(std::string op, Shape shape, std::vector<Real> values,
                 const std::vector<DiffArray>& inputs,
                 std::function<void(detail::Node&)> backward) {
  return record_impl(std::move(op), std::move(shape), std::move(values), inputs,
                     std::move(backward));
}

void backward(const DiffArray& output) {
  if (!output.defined()) throw Error("backward on undefined array");
  const auto& root = output.node();
  if (!root->recorded) throw Error("backward requested but no forward pass was recorded");
  if (output.numel() != 1) throw Error("backward requires a scalar output");

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long tapes.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->recorded && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->grad.empty() || !node->backward) continue;
    node->backward(*node);
  }
}

}  // namespace hig
