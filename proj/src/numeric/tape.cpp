#include "ufin/numeric/tape.hpp"

#include "ufin/error.hpp"

namespace ufin {

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  return push(std::move(node));
}

Var Tape::constant_ref(const Tensor& value) {
  Node node;
  node.borrowed = &value;
  return push(std::move(node));
}

Var Tape::param(Tensor& parameter) {
  if (!grad_enabled_) return constant_ref(parameter);
  if (!parameter.tracked()) {
    throw std::invalid_argument("Tape::param: tensor " + shape_string(parameter.shape()) +
                                " is not tracked");
  }
  Node node;
  node.borrowed = &parameter;
  node.parameter = &parameter;
  node.requires_grad = true;
  return push(std::move(node));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node node;
  node.owned = std::move(value);
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw std::invalid_argument("Tape::record: input from another tape");
    if (nodes_[in.id()].requires_grad) node.requires_grad = true;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

const Tensor& Tape::value(Var v) const { return nodes_[v.id()].value(); }

std::span<double> Tape::grad(Var v) {
  Node& node = nodes_[v.id()];
  if (!node.requires_grad) return {};
  if (node.grad.empty()) node.grad.assign(node.value().size(), 0.0);
  return node.grad;
}

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("Tape::backward: root must be a scalar, got " +
                     shape_string(value(root).shape()));
  }
  if (!requires_grad(root)) return;
  grad(root)[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, Var(this, i));
    if (node.parameter) {
      auto dst = node.parameter->grad();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad[k];
    }
  }
}

}  // namespace ufin
