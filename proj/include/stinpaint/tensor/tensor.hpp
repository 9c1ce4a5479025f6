#pragma once

#include <Eigen/Core>
#include <array>
#include <string>

#include "stinpaint/common/error.hpp"

namespace stinpaint {

/// (batch, channel, T, H, W). Lower-rank values use leading/trailing 1s:
/// a conv weight is (Cout, Cin, kt, kh, kw), a bias (1, Cout, 1, 1, 1), a
/// scalar (1, 1, 1, 1, 1).
struct Shape5 {
  int n = 1;
  int c = 1;
  int t = 1;
  int h = 1;
  int w = 1;

  Eigen::Index numel() const { return Eigen::Index(n) * c * t * h * w; }
  Eigen::Index spatial() const { return Eigen::Index(t) * h * w; }
  std::array<int, 5> dims() const { return {n, c, t, h, w}; }
  friend bool operator==(const Shape5&, const Shape5&) = default;
  std::string str() const;
};

template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(const Shape5& shape, Scalar fill = Scalar(0)) : shape_(shape) {
    if (shape.n < 1 || shape.c < 1 || shape.t < 1 || shape.h < 1 || shape.w < 1)
      throw ShapeError("tensor dims must be >= 1, got " + shape.str());
    data_ = Vector::Constant(shape.numel(), fill);
  }
  Tensor(const Shape5& shape, Vector values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape.numel()) throw ShapeError("tensor data length does not match " + shape.str());
  }

  static Tensor scalar(Scalar v) { return Tensor(Shape5{}, v); }

  const Shape5& shape() const { return shape_; }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector& vec() { return data_; }
  const Vector& vec() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Eigen::Index offset(int n, int c, int t, int h, int w) const {
    return (((Eigen::Index(n) * shape_.c + c) * shape_.t + t) * shape_.h + h) * shape_.w + w;
  }
  Scalar& operator()(int n, int c, int t, int h, int w) { return data_[offset(n, c, t, h, w)]; }
  Scalar operator()(int n, int c, int t, int h, int w) const { return data_[offset(n, c, t, h, w)]; }

  Scalar item() const {
    if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_.str());
    return data_[0];
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.allFinite(); }

 private:
  Shape5 shape_{0, 0, 0, 0, 0};
  Vector data_;
};

}  // namespace stinpaint
