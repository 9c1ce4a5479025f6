#pragma once

#include <array>

#include "stinpaint/tensor/tape.hpp"

namespace stinpaint {

struct Conv3dParams {
  std::array<int, 3> stride{1, 1, 1};   // (t, h, w)
  std::array<int, 3> padding{0, 0, 0};  // zero padding, (t, h, w)
};

/// out = floor((in + 2p - k) / s) + 1 per axis. Throws ShapeError on channel
/// mismatch or a nonpositive output extent.
Shape5 conv3d_output_shape(const Shape5& input, const Shape5& weight, const Conv3dParams& p);

/// Cross-correlation of x (B, Cin, T, H, W) with w (Cout, Cin, kt, kh, kw),
/// plus an optional bias (1, Cout, 1, 1, 1). Tape-free kernel.
template <typename Scalar>
Tensor<Scalar> conv3d_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>* bias,
                              const Conv3dParams& p);

/// Sums a window of a single-channel field (B, 1, T, H, W) with an all-ones
/// kernel of extent `kernel`: the receptive-field count used by mask updates.
template <typename Scalar>
Tensor<Scalar> window_sum(const Tensor<Scalar>& field, const std::array<int, 3>& kernel, const Conv3dParams& p);

// Differentiable ops. Pass Var{} for an absent bias.
template <typename Scalar>
Var conv3d(Tape<Scalar>& tape, Var x, Var w, Var bias, const Conv3dParams& p);

/// Nearest-neighbour resize of (T, H, W) with src = floor(dst * src_dim / dst_dim).
template <typename Scalar>
Var upsample_nearest_to(Tape<Scalar>& tape, Var x, int t, int h, int w);

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x);

template <typename Scalar>
Var leaky_relu(Tape<Scalar>& tape, Var x, Scalar slope);

/// Stacks channels of a then b; all other dims must agree.
template <typename Scalar>
Var concat_channels(Tape<Scalar>& tape, Var a, Var b);

template <typename Scalar>
struct BatchNormState {
  Tensor<Scalar>* running_mean = nullptr;  // (1, C, 1, 1, 1)
  Tensor<Scalar>* running_var = nullptr;
  Scalar momentum = Scalar(0.1);
  Scalar eps = Scalar(1e-5);
};

/// Per-channel normalization over (B, T, H, W). Training mode normalizes with
/// batch statistics and updates the running estimates (unbiased variance);
/// evaluation mode uses the running estimates.
template <typename Scalar>
Var batch_norm(Tape<Scalar>& tape, Var x, Var gamma, Var beta, BatchNormState<Scalar> state, bool training);

/// Elementwise product with a same-shape constant.
template <typename Scalar>
Var mul_constant(Tape<Scalar>& tape, Var x, const Tensor<Scalar>& c);

/// out[n,c,...] = y[n,c,...] * scale[n,0,...] + bias[c] * keep[n,0,...].
template <typename Scalar>
Var scale_positions_add_bias(Tape<Scalar>& tape, Var y, Var bias, const Tensor<Scalar>& scale,
                             const Tensor<Scalar>& keep);

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b);

template <typename Scalar>
Var mul(Tape<Scalar>& tape, Var a, Var b);

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var x, Scalar s);

template <typename Scalar>
Var sum(Tape<Scalar>& tape, Var x);

template <typename Scalar>
Var mean(Tape<Scalar>& tape, Var x);

/// sum(|x - target| * weight) / denom, a scalar. The subgradient at a zero
/// residual is 0.
template <typename Scalar>
Var weighted_abs_sum(Tape<Scalar>& tape, Var x, const Tensor<Scalar>& target, const Tensor<Scalar>& weight,
                     Scalar denom);

}  // namespace stinpaint
