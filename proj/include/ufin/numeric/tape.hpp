#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>

#include "ufin/numeric/tensor.hpp"

namespace ufin {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid for the
/// lifetime of the tape that produced it.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so a
/// single reverse sweep over the node list is a valid topological order.
///
/// A tape is built per mini-batch and discarded after the backward pass;
/// gradients of parameter leaves are accumulated into the parameter's own
/// gradient buffer when backward() finishes.
class Tape {
 public:
  // Receives the tape and the op's own output handle.
  using Backward = std::function<void(Tape&, Var)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // The referenced tensor must outlive the tape.
  Var constant_ref(const Tensor& value);
  // Leaf bound to a tracked parameter. With gradients disabled this is a
  // plain borrowed constant.
  Var param(Tensor& parameter);

  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  // Appends an op result. `backward` runs only if some input needs a grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  // Gradient buffer of v (allocated on first use), or an empty span when v
  // does not need a gradient.
  std::span<double> grad(Var v);

  // Seeds d(root)/d(root) = 1 and sweeps the tape backwards. `root` must be
  // a single-element tensor.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor* parameter = nullptr;
    std::vector<double> grad;
    Backward backward;
    bool requires_grad = false;

    const Tensor& value() const { return borrowed ? *borrowed : owned; }
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace ufin
