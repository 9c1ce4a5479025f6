#include "stinpaint/tensor/tape.hpp"

#include <sstream>

namespace stinpaint {

std::string Shape5::str() const {
  std::ostringstream ss;
  ss << '(' << n << ',' << c << ',' << t << ',' << h << ',' << w << ')';
  return ss.str();
}

template <typename Scalar>
Var Tape<Scalar>::constant(TensorT value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename Scalar>
Var Tape<Scalar>::variable(TensorT value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename Scalar>
Var Tape<Scalar>::record(TensorT value, std::initializer_list<Var> parents, Adjoint adjoint) {
  bool needs = false;
  for (Var p : parents) needs = needs || requires_grad(p);
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(adjoint) : Adjoint{}, needs});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename Scalar>
Tensor<Scalar> Tape<Scalar>::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad.empty() ? TensorT(n.value.shape()) : n.grad;
}

template <typename Scalar>
void Tape<Scalar>::accumulate(Var v, const TensorT& g) {
  if (!requires_grad(v)) return;
  Node& n = nodes_[v.id];
  if (g.shape() != n.value.shape())
    throw ShapeError("gradient shape " + g.shape().str() + " != value shape " + n.value.shape().str());
  if (n.grad.empty())
    n.grad = g;
  else
    n.grad.vec() += g.vec();
}

template <typename Scalar>
void Tape<Scalar>::accumulate(Var v, TensorT&& g) {
  if (!requires_grad(v)) return;
  Node& n = nodes_[v.id];
  if (g.shape() != n.value.shape())
    throw ShapeError("gradient shape " + g.shape().str() + " != value shape " + n.value.shape().str());
  if (n.grad.empty())
    n.grad = std::move(g);
  else
    n.grad.vec() += g.vec();
}

template <typename Scalar>
void Tape<Scalar>::backward(Var root) {
  if (nodes_.at(root.id).value.size() != 1) throw ShapeError("backward() needs a scalar root");
  for (auto& n : nodes_) n.grad = TensorT();
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = TensorT::scalar(Scalar(1));
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.adjoint || n.grad.empty()) continue;
    // Adjoints only touch parents (smaller ids), so n.grad stays put.
    n.adjoint(*this, n.grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace stinpaint
