#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "stinpaint/tensor/tensor.hpp"

namespace stinpaint {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Ops append nodes in execution order; backward() walks
/// them in exact reverse order, calling each node's adjoint with its
/// accumulated output gradient. Nodes whose inputs do not require gradients
/// store no adjoint.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;
  using Adjoint = std::function<void(Tape&, const TensorT& grad_out)>;

  Var constant(TensorT value);
  Var variable(TensorT value);
  Var record(TensorT value, std::initializer_list<Var> parents, Adjoint adjoint);

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  const Shape5& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const { return v.valid() && nodes_.at(v.id).requires_grad; }

  bool has_grad(Var v) const { return !nodes_.at(v.id).grad.empty(); }
  /// Gradient after backward(); zeros when nothing flowed into `v`.
  TensorT grad(Var v) const;

  /// Adds `g` into v's gradient; no-op when v does not require gradients.
  void accumulate(Var v, const TensorT& g);
  void accumulate(Var v, TensorT&& g);

  /// Clears previous gradients, seeds d(root)/d(root) = 1 and back-propagates.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    TensorT value;
    TensorT grad;
    Adjoint adjoint;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace stinpaint
