#pragma once

#include <string>

#include "stinpaint/tensor/ops.hpp"

namespace stinpaint {

enum class Activation { kNone, kRelu, kLeakyRelu };

/// One layer of the U-Net: partial convolution, optional batch norm, activation.
struct PartialConv3dLayer {
  std::string name;
  int in_channels = 1;
  int out_channels = 1;
  std::array<int, 3> kernel{1, 1, 1};
  Conv3dParams conv;
  bool has_bn = false;
  Activation activation = Activation::kNone;

  Shape5 weight_shape() const { return Shape5{out_channels, in_channels, kernel[0], kernel[1], kernel[2]}; }
};

template <typename Scalar>
struct PartialConvResult {
  Var output;
  Tensor<Scalar> mask;  // (B, Cout, To, Ho, Wo), binary
  bool degenerate = false;  // no output position saw a valid voxel
};

/// Partial convolution with mask update. `mask` has the input's shape and is
/// binary. For a window W with at least one valid voxel,
///   out = conv(x * M, w) * |W| / (|W| - holes(W)) + b,   mask' = 1,
/// where |W| = kt*kh*kw*Cin and holes(W) counts in-bounds hole voxels; zero
/// padding therefore behaves as observed zeros and an all-ones mask reduces to
/// plain conv3d. Windows without valid voxels give out = 0, mask' = 0.
template <typename Scalar>
PartialConvResult<Scalar> partial_conv3d(Tape<Scalar>& tape, Var input, const Tensor<Scalar>& mask, Var weight,
                                         Var bias, const Conv3dParams& p);

/// Repeats a (B, 1, T, H, W) mask across `channels`.
template <typename Scalar>
Tensor<Scalar> expand_mask(const Tensor<Scalar>& mask, int channels);

/// Channel-concatenation and nearest resize of masks (no gradients).
template <typename Scalar>
Tensor<Scalar> concat_masks(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar>
Tensor<Scalar> upsample_mask_to(const Tensor<Scalar>& mask, int t, int h, int w);

}  // namespace stinpaint
