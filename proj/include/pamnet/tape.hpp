#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "pamnet/tensor.hpp"

namespace pamnet {

/// A learnable tensor with its gradient accumulator.
///
/// Gradients are summed into `grad` by every backward pass that touches the
/// parameter and stay there until `zero_grad()`.
template <class Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor<Real> v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor<Real>::zeros(value.shape())) {}

  void zero_grad() { grad.fill(Real(0)); }
};

template <class Real>
class Tape;

/// Handle to a value recorded on a tape.
template <class Real>
class Var {
 public:
  Var() = default;
  Var(Tape<Real>* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape<Real>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor<Real>& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<Real>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of executed operations, replayed in reverse to compute
/// vector-Jacobian products.
template <class Real>
class Tape {
 public:
  /// Called during backward with the id of the node being replayed. The
  /// closure reads `grad(id)` and accumulates into the grads of its inputs.
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var<Real> constant(Tensor<Real> value);
  /// Leaf that receives a gradient, readable with `grad()` after backward.
  Var<Real> variable(Tensor<Real> value);
  /// Leaf bound to a parameter. Frozen parameters behave as constants. The
  /// parameter must outlive the tape.
  Var<Real> parameter(Parameter<Real>& p);

  /// Records an operation output. The backward closure is kept only when at
  /// least one input requires a gradient.
  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> inputs, Backward backward);

  const Tensor<Real>& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  /// Gradient of a node; zeros when nothing flowed into it.
  Tensor<Real> grad(Var<Real> v) const;
  /// Mutable gradient slot, zero-allocated on first use.
  Tensor<Real>& grad_slot(std::size_t id);

  /// Seeds d(root)/d(root) = 1 (root must hold one element) and replays the
  /// recorded operations in reverse, then adds leaf gradients into their
  /// bound parameters.
  void backward(Var<Real> root);

  /// Node ids visited by the last backward call, in visit order.
  const std::vector<std::size_t>& replay_order() const noexcept { return replay_order_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor<Real> value;
    const Tensor<Real>* borrowed = nullptr;
    Tensor<Real> grad;
    Backward backward;
    Parameter<Real>* param = nullptr;
    bool requires_grad = false;
  };

  // Deque keeps value references valid while later ops are recorded.
  std::deque<Node> nodes_;
  std::vector<std::size_t> replay_order_;
};

template <class Real>
const Tensor<Real>& Var<Real>::value() const {
  return tape_->value(id_);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace pamnet
