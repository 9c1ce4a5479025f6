#include "stinpaint/nn/partial_conv.hpp"

namespace stinpaint {

using Index = Eigen::Index;

template <typename S>
Tensor<S> expand_mask(const Tensor<S>& mask, int channels) {
  const Shape5 s = mask.shape();
  if (s.c != 1) throw ShapeError("expand_mask expects a single-channel mask");
  Tensor<S> out(Shape5{s.n, channels, s.t, s.h, s.w});
  const Index plane = s.spatial();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < channels; ++c)
      out.vec().segment((Index(n) * channels + c) * plane, plane) = mask.vec().segment(Index(n) * plane, plane);
  return out;
}

template <typename S>
Tensor<S> concat_masks(const Tensor<S>& a, const Tensor<S>& b) {
  Tape<S> scratch;
  const Var v = concat_channels(scratch, scratch.constant(a), scratch.constant(b));
  return scratch.value(v);
}

template <typename S>
Tensor<S> upsample_mask_to(const Tensor<S>& mask, int t, int h, int w) {
  Tape<S> scratch;
  const Var v = upsample_nearest_to(scratch, scratch.constant(mask), t, h, w);
  return scratch.value(v);
}

template <typename S>
PartialConvResult<S> partial_conv3d(Tape<S>& tape, Var input, const Tensor<S>& mask, Var weight, Var bias,
                                    const Conv3dParams& p) {
  const Shape5 in = tape.shape(input);
  if (!(mask.shape() == in)) throw ShapeError("partial_conv3d: mask " + mask.shape().str() + " vs input " + in.str());
  const Shape5 ws = tape.shape(weight);
  const Shape5 out_shape = conv3d_output_shape(in, ws, p);
  const std::array<int, 3> kernel{ws.t, ws.h, ws.w};
  const S window = S(Index(ws.c) * ws.t * ws.h * ws.w);

  // Per-position valid and hole counts summed over channels.
  const Index plane = in.spatial();
  Tensor<S> valid_field(Shape5{in.n, 1, in.t, in.h, in.w});
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c)
      valid_field.vec().segment(Index(n) * plane, plane) += mask.vec().segment((Index(n) * in.c + c) * plane, plane);
  Tensor<S> hole_field(valid_field.shape(), (S(in.c) - valid_field.vec().array()).matrix());
  const Tensor<S> valid_count = window_sum(valid_field, kernel, p);
  const Tensor<S> hole_count = window_sum(hole_field, kernel, p);

  Tensor<S> ratio(valid_count.shape());
  Tensor<S> keep(valid_count.shape());
  bool any_valid = false;
  for (Index i = 0; i < ratio.size(); ++i) {
    if (valid_count.vec()[i] > S(0)) {
      ratio.vec()[i] = window / (window - hole_count.vec()[i]);
      keep.vec()[i] = S(1);
      any_valid = true;
    }
  }

  const Var masked = mul_constant(tape, input, mask);
  const Var raw = conv3d(tape, masked, weight, Var{}, p);
  PartialConvResult<S> result;
  result.output = scale_positions_add_bias(tape, raw, bias, ratio, keep);
  result.mask = expand_mask(keep, out_shape.c);
  result.degenerate = !any_valid;
  return result;
}

#define STINPAINT_INSTANTIATE_PCONV(S)                                                                        \
  template Tensor<S> expand_mask<S>(const Tensor<S>&, int);                                                \
  template Tensor<S> concat_masks<S>(const Tensor<S>&, const Tensor<S>&);                                  \
  template Tensor<S> upsample_mask_to<S>(const Tensor<S>&, int, int, int);                                 \
  template PartialConvResult<S> partial_conv3d<S>(Tape<S>&, Var, const Tensor<S>&, Var, Var, const Conv3dParams&);

STINPAINT_INSTANTIATE_PCONV(float)
STINPAINT_INSTANTIATE_PCONV(double)

}  // namespace stinpaint
