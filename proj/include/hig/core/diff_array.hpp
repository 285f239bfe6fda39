// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hig/core/real.hpp"

namespace hig {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the reverse-mode tape. Op outputs keep their inputs alive
// through `inputs`; `backward` reads this node's grad and accumulates into
// the grads of inputs that require it.
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  bool recorded = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<Real>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
    return grad;
  }
};

}  // namespace detail

// Dense row-major array with optional reverse-mode gradient tracking.
//
// Copies are shallow: two DiffArray handles may refer to the same node.
// Parameters are leaves with requires_grad set; every op result that depends
// on one records a backward closure until `backward` is called on a scalar.
class DiffArray {
 public:
  DiffArray() = default;

  static DiffArray constant(Shape shape, std::vector<Real> values);
  static DiffArray zeros(Shape shape);
  static DiffArray full(Shape shape, Real value);
  static DiffArray scalar(Real value);
  static DiffArray parameter(Shape shape, std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const Real> values() const;
  // Direct write access; only meaningful for leaves (optimizer updates,
  // test perturbations). Recorded ops never observe later writes.
  std::span<Real> mutable_values();
  Real item() const;
  Real at(std::size_t flat_index) const { return values()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  // Value copy with no tape history.
  DiffArray detach() const;
  DiffArray reshape(Shape shape) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit DiffArray(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// True when new ops should record backward closures (thread-local switch).
bool grad_enabled();

// Disables tape recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Creates an op output. The closure is attached only when recording is
// enabled and at least one input requires a gradient. Non-finite outputs
// raise an Error naming `op`.
DiffArray record(std::string op, Shape shape, std::vector<Real> values,
                 std::initializer_list<DiffArray> inputs,
                 std::function<void(detail::Node&)> backward);
DiffArray record(std::string op, Shape shape, std::vector<Real> values,
                 const std::vector<DiffArray>& inputs,
                 std::function<void(detail::Node&)> backward);

// Runs reverse-mode accumulation from a scalar op output. Gradients add into
// every reachable node that requires one.
void backward(const DiffArray& output);

}  // namespace hig
