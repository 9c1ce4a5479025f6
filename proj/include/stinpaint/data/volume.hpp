#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "stinpaint/common/error.hpp"

namespace stinpaint {

/// Dense T x H x W array stored row-major with t outermost. The shape is
/// fixed at construction; only values change.
template <typename Scalar>
class Volume {
 public:
  using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Frame = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using FrameMap = Eigen::Map<Frame>;
  using ConstFrameMap = Eigen::Map<const Frame>;

  Volume() = default;

  Volume(int frames, int rows, int cols, Scalar fill = Scalar(0)) : t_(frames), h_(rows), w_(cols) {
    if (frames < 1 || rows < 1 || cols < 1) throw ShapeError("volume dimensions must be >= 1");
    data_ = Storage::Constant(Eigen::Index(frames) * rows * cols, fill);
  }

  int frames() const { return t_; }
  int rows() const { return h_; }
  int cols() const { return w_; }
  Eigen::Index frame_size() const { return Eigen::Index(h_) * w_; }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  bool same_shape(const Volume& o) const { return t_ == o.t_ && h_ == o.h_ && w_ == o.w_; }
  template <typename Other>
  bool same_shape(const Volume<Other>& o) const {
    return t_ == o.frames() && h_ == o.rows() && w_ == o.cols();
  }

  Scalar& operator()(int t, int r, int c) { return data_[index(t, r, c)]; }
  Scalar operator()(int t, int r, int c) const { return data_[index(t, r, c)]; }

  Eigen::Index index(int t, int r, int c) const { return (Eigen::Index(t) * h_ + r) * w_ + c; }

  FrameMap frame(int t) { return FrameMap(data_.data() + t * frame_size(), h_, w_); }
  ConstFrameMap frame(int t) const { return ConstFrameMap(data_.data() + t * frame_size(), h_, w_); }

  Storage& values() { return data_; }
  const Storage& values() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  /// Copies frames [first, first + count).
  Volume slice(int first, int count) const {
    if (first < 0 || count < 1 || first + count > t_) throw ShapeError("frame slice out of range");
    Volume out(count, h_, w_);
    out.data_ = data_.segment(first * frame_size(), count * frame_size());
    return out;
  }

  friend bool operator==(const Volume& a, const Volume& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int t_ = 0;
  int h_ = 0;
  int w_ = 0;
  Storage data_;
};

/// Histogram block: event counts (or predictions) as 32-bit reals.
using GridBlock = Volume<float>;
/// Binary mask, 1 = valid (observed), 0 = hole.
using MaskBlock = Volume<std::uint8_t>;

/// Number of hole (0) voxels.
inline Eigen::Index count_holes(const MaskBlock& m) {
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) n += m.values()[i] == 0;
  return n;
}

}  // namespace stinpaint
