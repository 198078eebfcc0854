#include "pamnet/tape.hpp"

#include "pamnet/errors.hpp"

namespace pamnet {

template <class Real>
Var<Real> Tape<Real>::constant(Tensor<Real> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var<Real>(this, nodes_.size() - 1);
}

template <class Real>
Var<Real> Tape<Real>::variable(Tensor<Real> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var<Real>(this, nodes_.size() - 1);
}

template <class Real>
Var<Real> Tape<Real>::parameter(Parameter<Real>& p) {
  Node n;
  n.borrowed = &p.value;
  if (!p.frozen) {
    n.param = &p;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var<Real>(this, nodes_.size() - 1);
}

template <class Real>
Var<Real> Tape<Real>::record(Tensor<Real> value, std::initializer_list<Var<Real>> inputs,
                             Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.valid() && &in.tape() != this) throw Error("operation mixes tapes");
    if (in.valid() && nodes_[in.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<Real>(this, nodes_.size() - 1);
}

template <class Real>
const Tensor<Real>& Tape<Real>::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.borrowed ? *n.borrowed : n.value;
}

template <class Real>
Tensor<Real> Tape<Real>::grad(Var<Real> v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.empty()) return Tensor<Real>::zeros(value(v.id()).shape());
  return n.grad;
}

template <class Real>
Tensor<Real>& Tape<Real>::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor<Real>::zeros(value(id).shape());
  return n.grad;
}

template <class Real>
void Tape<Real>::backward(Var<Real> root) {
  if (&root.tape() != this) throw Error("backward root belongs to another tape");
  if (value(root.id()).size() != 1) {
    throw DimensionError("backward root must be a scalar, got " +
                         shape_to_string(value(root.id()).shape()));
  }
  replay_order_.clear();
  if (!nodes_[root.id()].requires_grad) return;
  grad_slot(root.id())[0] += Real(1);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    replay_order_.push_back(i);
    if (n.backward) n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param && !n.grad.empty()) {
      auto& dst = n.param->grad.storage();
      const auto& src = n.grad.storage();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

template <class Real>
void Tape<Real>::clear() {
  nodes_.clear();
  nodes_.shrink_to_fit();
  replay_order_.clear();
}

template class Tape<float>;
template class Tape<double>;

}  // namespace pamnet
