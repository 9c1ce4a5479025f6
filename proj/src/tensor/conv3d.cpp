#include <algorithm>
#include <memory>
#include <vector>

#include "stinpaint/common/parallel.hpp"
#include "stinpaint/tensor/ops.hpp"

namespace stinpaint {
namespace {

using Index = Eigen::Index;

struct Geometry {
  int cin, t, h, w;
  int kt, kh, kw;
  int st, sh, sw;
  int pt, ph, pw;
  int to, ho, wo;

  Index k() const { return Index(cin) * kt * kh * kw; }
  Index p() const { return Index(to) * ho * wo; }
  Index in_volume() const { return Index(cin) * t * h * w; }
};

Geometry make_geometry(const Shape5& in, const Shape5& weight, const Conv3dParams& p) {
  const Shape5 out = conv3d_output_shape(in, weight, p);
  return Geometry{in.c,        in.t,        in.h,        in.w,        weight.t,    weight.h,
                  weight.w,    p.stride[0], p.stride[1], p.stride[2], p.padding[0], p.padding[1],
                  p.padding[2], out.t,      out.h,       out.w};
}

// Output columns [lo, hi) read input columns inside [0, w) for kernel tap dw.
struct ColRange {
  int lo, hi;
};

ColRange valid_cols(const Geometry& g, int dw) {
  // ow * sw - pw + dw in [0, w)
  const int num_lo = g.pw - dw;
  int lo = num_lo <= 0 ? 0 : (num_lo + g.sw - 1) / g.sw;
  const int num_hi = g.w - 1 + g.pw - dw;
  int hi = num_hi < 0 ? 0 : num_hi / g.sw + 1;
  lo = std::min(lo, g.wo);
  hi = std::clamp(hi, lo, g.wo);
  return {lo, hi};
}

// Columns are laid out K x P row-major: row k = (c, dt, dh, dw), column p =
// output position (t, h, w).
template <typename S>
void im2col(const S* x, const Geometry& g, S* col) {
  const Index P = g.p();
  Index row = 0;
  for (int c = 0; c < g.cin; ++c)
    for (int dt = 0; dt < g.kt; ++dt)
      for (int dh = 0; dh < g.kh; ++dh)
        for (int dw = 0; dw < g.kw; ++dw, ++row) {
          S* dst = col + row * P;
          const ColRange cr = valid_cols(g, dw);
          for (int ot = 0; ot < g.to; ++ot) {
            const int it = ot * g.st - g.pt + dt;
            for (int oh = 0; oh < g.ho; ++oh) {
              const int ih = oh * g.sh - g.ph + dh;
              S* d = dst + (Index(ot) * g.ho + oh) * g.wo;
              if (it < 0 || it >= g.t || ih < 0 || ih >= g.h) {
                std::fill(d, d + g.wo, S(0));
                continue;
              }
              const S* src = x + ((Index(c) * g.t + it) * g.h + ih) * g.w;
              const int shift = dw - g.pw;
              std::fill(d, d + cr.lo, S(0));
              if (g.sw == 1) {
                std::copy(src + cr.lo + shift, src + cr.hi + shift, d + cr.lo);
              } else {
                for (int ow = cr.lo; ow < cr.hi; ++ow) d[ow] = src[ow * g.sw + shift];
              }
              std::fill(d + cr.hi, d + g.wo, S(0));
            }
          }
        }
}

template <typename S>
void col2im_add(const S* col, const Geometry& g, S* dx) {
  const Index P = g.p();
  Index row = 0;
  for (int c = 0; c < g.cin; ++c)
    for (int dt = 0; dt < g.kt; ++dt)
      for (int dh = 0; dh < g.kh; ++dh)
        for (int dw = 0; dw < g.kw; ++dw, ++row) {
          const S* src = col + row * P;
          const ColRange cr = valid_cols(g, dw);
          for (int ot = 0; ot < g.to; ++ot) {
            const int it = ot * g.st - g.pt + dt;
            if (it < 0 || it >= g.t) continue;
            for (int oh = 0; oh < g.ho; ++oh) {
              const int ih = oh * g.sh - g.ph + dh;
              if (ih < 0 || ih >= g.h) continue;
              const S* s = src + (Index(ot) * g.ho + oh) * g.wo;
              S* d = dx + ((Index(c) * g.t + it) * g.h + ih) * g.w;
              const int shift = dw - g.pw;
              for (int ow = cr.lo; ow < cr.hi; ++ow) d[ow * g.sw + shift] += s[ow];
            }
          }
        }
}


// Stride-1 convolutions with a single temporal tap run as one GEMM per
// spatial tap over a zero-padded copy of the input, so no column buffer is
// built. Padded frames are stacked vertically; positions whose window
// straddles two frames are computed and dropped.
struct ShiftPlan {
  int cin, cout, t, h, w, kh, kw, ph, pw, ho, wo, hp, wp;

  Index plane() const { return Index(t) * hp * wp; }
  Index span() const { return plane() - (Index(kh - 1) * wp + (kw - 1)); }
  Index offset(int dh, int dw) const { return Index(dh) * wp + dw; }
  Index at(int ot, int oh) const { return (Index(ot) * hp + oh) * wp; }
};

bool shift_eligible(const Geometry& g) { return g.kt == 1 && g.pt == 0 && g.st == 1 && g.sh == 1 && g.sw == 1; }

ShiftPlan make_shift_plan(const Geometry& g, int cout) {
  return ShiftPlan{g.cin, cout, g.t, g.h, g.w, g.kh, g.kw, g.ph, g.pw, g.ho, g.wo, g.h + 2 * g.ph, g.w + 2 * g.pw};
}

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using StridedRows = Eigen::Map<const RowMat<S>, 0, Eigen::OuterStride<>>;

template <typename S>
void pad_sample(const S* x, const ShiftPlan& sp, S* xp) {
  std::fill(xp, xp + Index(sp.cin) * sp.plane(), S(0));
  for (int c = 0; c < sp.cin; ++c)
    for (int t = 0; t < sp.t; ++t)
      for (int r = 0; r < sp.h; ++r) {
        const S* src = x + ((Index(c) * sp.t + t) * sp.h + r) * sp.w;
        std::copy(src, src + sp.w, xp + Index(c) * sp.plane() + sp.at(t, r + sp.ph) + sp.pw);
      }
}

// Per-tap (Cout x Cin) slices of a (Cout, Cin, 1, kh, kw) weight.
template <typename S>
std::vector<RowMat<S>> split_taps(const S* w, const ShiftPlan& sp) {
  std::vector<RowMat<S>> taps(static_cast<std::size_t>(sp.kh * sp.kw), RowMat<S>(sp.cout, sp.cin));
  for (int co = 0; co < sp.cout; ++co)
    for (int ci = 0; ci < sp.cin; ++ci)
      for (int k = 0; k < sp.kh * sp.kw; ++k) taps[k](co, ci) = w[(Index(co) * sp.cin + ci) * sp.kh * sp.kw + k];
  return taps;
}

template <typename S>
void shift_forward(const S* xp, const ShiftPlan& sp, const std::vector<RowMat<S>>& taps, const S* bias, S* y) {
  const Index span = sp.span();
  RowMat<S> yf(sp.cout, span);
  for (int dh = 0; dh < sp.kh; ++dh)
    for (int dw = 0; dw < sp.kw; ++dw) {
      const StridedRows<S> xs(xp + sp.offset(dh, dw), sp.cin, span, Eigen::OuterStride<>(sp.plane()));
      if (dh == 0 && dw == 0)
        yf.noalias() = taps[0] * xs;
      else
        yf.noalias() += taps[dh * sp.kw + dw] * xs;
    }
  for (int co = 0; co < sp.cout; ++co)
    for (int t = 0; t < sp.t; ++t)
      for (int oh = 0; oh < sp.ho; ++oh) {
        const S* src = yf.data() + Index(co) * span + sp.at(t, oh);
        S* dst = y + ((Index(co) * sp.t + t) * sp.ho + oh) * sp.wo;
        const S b = bias ? bias[co] : S(0);
        for (int ow = 0; ow < sp.wo; ++ow) dst[ow] = src[ow] + b;
      }
}

void check_bias(const Shape5& bias, int cout) {
  if (!(bias == Shape5{1, cout, 1, 1, 1})) throw ShapeError("conv3d bias must be (1, Cout, 1, 1, 1), got " + bias.str());
}

}  // namespace

Shape5 conv3d_output_shape(const Shape5& in, const Shape5& weight, const Conv3dParams& p) {
  if (in.c != weight.c)
    throw ShapeError("conv3d channel mismatch: input " + in.str() + " vs weight " + weight.str());
  for (int a = 0; a < 3; ++a)
    if (p.stride[a] < 1 || p.padding[a] < 0) throw ShapeError("conv3d stride must be >= 1 and padding >= 0");
  const std::array<int, 3> src{in.t, in.h, in.w};
  const std::array<int, 3> k{weight.t, weight.h, weight.w};
  std::array<int, 3> out{};
  for (int a = 0; a < 3; ++a) {
    const int span = src[a] + 2 * p.padding[a] - k[a];
    out[a] = span < 0 ? 0 : span / p.stride[a] + 1;
    if (out[a] < 1)
      throw ShapeError("conv3d output extent nonpositive: input " + in.str() + ", weight " + weight.str());
  }
  return Shape5{in.n, weight.n, out[0], out[1], out[2]};
}

template <typename S>
Tensor<S> conv3d_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>* bias, const Conv3dParams& p) {
  const Shape5 out_shape = conv3d_output_shape(x.shape(), w.shape(), p);
  const Geometry g = make_geometry(x.shape(), w.shape(), p);
  const int cout = w.shape().n;
  if (bias) check_bias(bias->shape(), cout);
  Tensor<S> y(out_shape);
  const Index out_volume = Index(cout) * out_shape.spatial();
  if (shift_eligible(g)) {
    const ShiftPlan sp = make_shift_plan(g, cout);
    const auto taps = split_taps(w.data(), sp);
    parallel_for(static_cast<std::size_t>(x.shape().n), [&](std::size_t b) {
      const std::unique_ptr<S[]> xp(new S[static_cast<std::size_t>(Index(sp.cin) * sp.plane())]);
      pad_sample(x.data() + Index(b) * g.in_volume(), sp, xp.get());
      shift_forward(xp.get(), sp, taps, bias ? bias->data() : nullptr, y.data() + Index(b) * out_volume);
    });
    return y;
  }
  const Index K = g.k(), P = g.p();
  const Eigen::Map<const RowMat<S>> wm(w.data(), cout, K);
  parallel_for(static_cast<std::size_t>(x.shape().n), [&](std::size_t b) {
    const std::unique_ptr<S[]> col(new S[static_cast<std::size_t>(K * P)]);
    im2col(x.data() + Index(b) * g.in_volume(), g, col.get());
    Eigen::Map<RowMat<S>> yb(y.data() + Index(b) * cout * P, cout, P);
    yb.noalias() = wm * Eigen::Map<const RowMat<S>>(col.get(), K, P);
    if (bias) yb.colwise() += bias->vec();
  });
  return y;
}

template <typename S>
Tensor<S> window_sum(const Tensor<S>& field, const std::array<int, 3>& kernel, const Conv3dParams& p) {
  if (field.shape().c != 1) throw ShapeError("window_sum expects a single-channel field");
  const Tensor<S> ones(Shape5{1, 1, kernel[0], kernel[1], kernel[2]}, S(1));
  return conv3d_forward<S>(field, ones, nullptr, p);
}

template <typename S>
Var conv3d_shift(Tape<S>& tape, Var x, Var w, Var bias, const Geometry& g, const Shape5& out_shape) {
  const Tensor<S>& xv = tape.value(x);
  const Tensor<S>& wv = tape.value(w);
  const int batch = xv.shape().n;
  const int cout = wv.shape().n;
  const ShiftPlan sp = make_shift_plan(g, cout);
  const Index in_volume = g.in_volume();
  const Index out_volume = Index(cout) * out_shape.spatial();
  const Index padded = Index(sp.cin) * sp.plane();

  // Padded inputs are kept for the weight gradient.
  const bool keep_inputs = tape.requires_grad(w);
  std::shared_ptr<S[]> xps(keep_inputs ? new S[static_cast<std::size_t>(batch * padded)] : nullptr);
  const auto taps = split_taps(wv.data(), sp);
  const S* bv = bias.valid() ? tape.value(bias).data() : nullptr;

  Tensor<S> y(out_shape);
  parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
    std::unique_ptr<S[]> scratch;
    S* xp = nullptr;
    if (keep_inputs) {
      xp = xps.get() + Index(b) * padded;
    } else {
      scratch.reset(new S[static_cast<std::size_t>(padded)]);
      xp = scratch.get();
    }
    pad_sample(xv.data() + Index(b) * in_volume, sp, xp);
    shift_forward(xp, sp, taps, bv, y.data() + Index(b) * out_volume);
  });

  return tape.record(std::move(y), {x, w, bias}, [=](Tape<S>& tp, const Tensor<S>& gy) {
    if (tp.requires_grad(bias)) {
      Tensor<S> gb(Shape5{1, cout, 1, 1, 1});
      for (int b = 0; b < batch; ++b)
        gb.vec() += Eigen::Map<const RowMat<S>>(gy.data() + Index(b) * out_volume, cout, out_shape.spatial())
                        .rowwise()
                        .sum();
      tp.accumulate(bias, std::move(gb));
    }
    const bool need_w = tp.requires_grad(w), need_x = tp.requires_grad(x);
    if (!need_w && !need_x) return;
    const auto taps_now = split_taps(tp.value(w).data(), sp);
    const Index span = sp.span();
    const int ntaps = sp.kh * sp.kw;
    std::vector<RowMat<S>> per_sample(need_w ? static_cast<std::size_t>(batch) : 0);
    Tensor<S> gx;
    if (need_x) gx = Tensor<S>(tp.value(x).shape());
    parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
      // Output gradient in the padded layout; dropped positions stay zero.
      RowMat<S> dyf = RowMat<S>::Zero(cout, span);
      const S* gyb = gy.data() + Index(b) * out_volume;
      for (int co = 0; co < cout; ++co)
        for (int t = 0; t < sp.t; ++t)
          for (int oh = 0; oh < sp.ho; ++oh)
            std::copy_n(gyb + ((Index(co) * sp.t + t) * sp.ho + oh) * sp.wo, sp.wo,
                        dyf.data() + Index(co) * span + sp.at(t, oh));
      if (need_w) {
        const S* xp = xps.get() + Index(b) * padded;
        RowMat<S>& gwb = per_sample[b];
        gwb.resize(cout, Index(sp.cin) * ntaps);
        RowMat<S> tap_grad(cout, sp.cin);
        for (int k = 0; k < ntaps; ++k) {
          const StridedRows<S> xs(xp + sp.offset(k / sp.kw, k % sp.kw), sp.cin, span,
                                  Eigen::OuterStride<>(sp.plane()));
          tap_grad.noalias() = dyf * xs.transpose();
          for (int ci = 0; ci < sp.cin; ++ci) gwb.col(Index(ci) * ntaps + k) = tap_grad.col(ci);
        }
      }
      if (need_x) {
        RowMat<S> dxp = RowMat<S>::Zero(sp.cin, sp.plane());
        for (int k = 0; k < ntaps; ++k)
          dxp.middleCols(sp.offset(k / sp.kw, k % sp.kw), span).noalias() += taps_now[k].transpose() * dyf;
        S* gxb = gx.data() + Index(b) * in_volume;
        for (int c = 0; c < sp.cin; ++c)
          for (int t = 0; t < sp.t; ++t)
            for (int r = 0; r < sp.h; ++r) {
              const S* src = dxp.data() + Index(c) * sp.plane() + sp.at(t, r + sp.ph) + sp.pw;
              std::copy_n(src, sp.w, gxb + ((Index(c) * sp.t + t) * sp.h + r) * sp.w);
            }
      }
    });
    if (need_w) {
      Tensor<S> gw(tp.value(w).shape());
      Eigen::Map<RowMat<S>> gwm(gw.data(), cout, Index(sp.cin) * ntaps);
      for (const auto& m : per_sample) gwm += m;
      tp.accumulate(w, std::move(gw));
    }
    if (need_x) tp.accumulate(x, std::move(gx));
  });
}

template <typename S>
Var conv3d(Tape<S>& tape, Var x, Var w, Var bias, const Conv3dParams& p) {
  const Tensor<S>& xv = tape.value(x);
  const Tensor<S>& wv = tape.value(w);
  const Shape5 out_shape = conv3d_output_shape(xv.shape(), wv.shape(), p);
  const Geometry g = make_geometry(xv.shape(), wv.shape(), p);
  const int batch = xv.shape().n;
  const int cout = wv.shape().n;
  if (bias.valid()) check_bias(tape.value(bias).shape(), cout);
  if (shift_eligible(g)) return conv3d_shift(tape, x, w, bias, g, out_shape);
  const Index K = g.k(), P = g.p();

  // Columns are kept for the weight gradient; otherwise one scratch per sample.
  const bool keep_cols = tape.requires_grad(w);
  std::shared_ptr<S[]> cols(keep_cols ? new S[static_cast<std::size_t>(batch * K * P)] : nullptr);

  Tensor<S> y(out_shape);
  const Eigen::Map<const RowMat<S>> wm(wv.data(), cout, K);
  const Tensor<S>* bv = bias.valid() ? &tape.value(bias) : nullptr;
  parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
    std::unique_ptr<S[]> scratch;
    S* col = nullptr;
    if (keep_cols) {
      col = cols.get() + Index(b) * K * P;
    } else {
      scratch.reset(new S[static_cast<std::size_t>(K * P)]);
      col = scratch.get();
    }
    im2col(xv.data() + Index(b) * g.in_volume(), g, col);
    Eigen::Map<RowMat<S>> yb(y.data() + Index(b) * cout * P, cout, P);
    yb.noalias() = wm * Eigen::Map<const RowMat<S>>(col, K, P);
    if (bv) yb.colwise() += bv->vec();
  });

  return tape.record(std::move(y), {x, w, bias}, [=](Tape<S>& tp, const Tensor<S>& gy) {
    const Tensor<S>& wv2 = tp.value(w);
    const Eigen::Map<const RowMat<S>> wmat(wv2.data(), cout, K);

    if (tp.requires_grad(bias)) {
      Tensor<S> gb(Shape5{1, cout, 1, 1, 1});
      for (int b = 0; b < batch; ++b)
        gb.vec() += Eigen::Map<const RowMat<S>>(gy.data() + Index(b) * cout * P, cout, P).rowwise().sum();
      tp.accumulate(bias, std::move(gb));
    }
    if (tp.requires_grad(w)) {
      std::vector<RowMat<S>> per_sample(static_cast<std::size_t>(batch));
      parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
        const Eigen::Map<const RowMat<S>> gyb(gy.data() + Index(b) * cout * P, cout, P);
        const Eigen::Map<const RowMat<S>> colb(cols.get() + Index(b) * K * P, K, P);
        per_sample[b].noalias() = gyb * colb.transpose();
      });
      Tensor<S> gw(wv2.shape());
      Eigen::Map<RowMat<S>> gwm(gw.data(), cout, K);
      for (const auto& m : per_sample) gwm += m;
      tp.accumulate(w, std::move(gw));
    }
    if (tp.requires_grad(x)) {
      Tensor<S> gx(tp.value(x).shape());
      parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
        const Eigen::Map<const RowMat<S>> gyb(gy.data() + Index(b) * cout * P, cout, P);
        RowMat<S> dcol(K, P);
        dcol.noalias() = wmat.transpose() * gyb;
        col2im_add(dcol.data(), g, gx.data() + Index(b) * g.in_volume());
      });
      tp.accumulate(x, std::move(gx));
    }
  });
}

#define STINPAINT_INSTANTIATE_CONV(S)                                                                        \
  template Tensor<S> conv3d_forward<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>*, const Conv3dParams&); \
  template Tensor<S> window_sum<S>(const Tensor<S>&, const std::array<int, 3>&, const Conv3dParams&);     \
  template Var conv3d<S>(Tape<S>&, Var, Var, Var, const Conv3dParams&);

STINPAINT_INSTANTIATE_CONV(float)
STINPAINT_INSTANTIATE_CONV(double)

}  // namespace stinpaint
