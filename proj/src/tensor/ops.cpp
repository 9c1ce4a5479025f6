#include <cmath>
#include <vector>

#include "stinpaint/tensor/ops.hpp"

namespace stinpaint {
namespace {

using Index = Eigen::Index;

void require_same(const Shape5& a, const Shape5& b, const char* op) {
  if (!(a == b)) throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

// Source index per destination index along one axis.
std::vector<int> nearest_map(int src, int dst) {
  std::vector<int> m(static_cast<std::size_t>(dst));
  for (int i = 0; i < dst; ++i) m[i] = static_cast<int>((Index(i) * src) / dst);
  return m;
}

}  // namespace

template <typename S>
Var upsample_nearest_to(Tape<S>& tape, Var x, int t, int h, int w) {
  if (t < 1 || h < 1 || w < 1) throw ShapeError("upsample target dims must be >= 1");
  const Shape5 in = tape.shape(x);
  const Shape5 out{in.n, in.c, t, h, w};
  const auto mt = nearest_map(in.t, t), mh = nearest_map(in.h, h), mw = nearest_map(in.w, w);
  const Index planes = Index(in.n) * in.c;
  const Tensor<S>& xv = tape.value(x);
  Tensor<S> y(out);
  for (Index p = 0; p < planes; ++p) {
    const S* src = xv.data() + p * in.spatial();
    S* dst = y.data() + p * out.spatial();
    for (int a = 0; a < t; ++a)
      for (int b = 0; b < h; ++b)
        for (int c = 0; c < w; ++c) *dst++ = src[(Index(mt[a]) * in.h + mh[b]) * in.w + mw[c]];
  }
  return tape.record(std::move(y), {x}, [=](Tape<S>& tp, const Tensor<S>& gy) {
    Tensor<S> gx(in);
    for (Index p = 0; p < planes; ++p) {
      const S* g = gy.data() + p * out.spatial();
      S* dst = gx.data() + p * in.spatial();
      for (int a = 0; a < t; ++a)
        for (int b = 0; b < h; ++b)
          for (int c = 0; c < w; ++c) dst[(Index(mt[a]) * in.h + mh[b]) * in.w + mw[c]] += *g++;
    }
    tp.accumulate(x, std::move(gx));
  });
}

template <typename S>
Var relu(Tape<S>& tape, Var x) {
  return leaky_relu(tape, x, S(0));
}

template <typename S>
Var leaky_relu(Tape<S>& tape, Var x, S slope) {
  const Tensor<S>& xv = tape.value(x);
  Tensor<S> y(xv.shape(), xv.vec().unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; }).eval());
  return tape.record(std::move(y), {x}, [x, slope](Tape<S>& tp, const Tensor<S>& gy) {
    const auto& xv2 = tp.value(x).vec();
    Tensor<S> gx(gy.shape(), (xv2.array() > S(0)).select(gy.vec().array(), slope * gy.vec().array()).matrix());
    tp.accumulate(x, std::move(gx));
  });
}

template <typename S>
Var concat_channels(Tape<S>& tape, Var a, Var b) {
  const Shape5 sa = tape.shape(a), sb = tape.shape(b);
  if (sa.n != sb.n || sa.t != sb.t || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat_channels: shapes " + sa.str() + " and " + sb.str() + " differ outside channels");
  const Shape5 out{sa.n, sa.c + sb.c, sa.t, sa.h, sa.w};
  const Index na = Index(sa.c) * sa.spatial(), nb = Index(sb.c) * sb.spatial();
  Tensor<S> y(out);
  for (int n = 0; n < sa.n; ++n) {
    y.vec().segment(n * (na + nb), na) = tape.value(a).vec().segment(n * na, na);
    y.vec().segment(n * (na + nb) + na, nb) = tape.value(b).vec().segment(n * nb, nb);
  }
  return tape.record(std::move(y), {a, b}, [=](Tape<S>& tp, const Tensor<S>& gy) {
    if (tp.requires_grad(a)) {
      Tensor<S> ga(sa);
      for (int n = 0; n < sa.n; ++n) ga.vec().segment(n * na, na) = gy.vec().segment(n * (na + nb), na);
      tp.accumulate(a, std::move(ga));
    }
    if (tp.requires_grad(b)) {
      Tensor<S> gb(sb);
      for (int n = 0; n < sa.n; ++n) gb.vec().segment(n * nb, nb) = gy.vec().segment(n * (na + nb) + na, nb);
      tp.accumulate(b, std::move(gb));
    }
  });
}

template <typename S>
Var batch_norm(Tape<S>& tape, Var x, Var gamma, Var beta, BatchNormState<S> state, bool training) {
  const Tensor<S>& xv = tape.value(x);
  const Shape5 s = xv.shape();
  const Shape5 cshape{1, s.c, 1, 1, 1};
  require_same(tape.shape(gamma), cshape, "batch_norm gamma");
  require_same(tape.shape(beta), cshape, "batch_norm beta");
  if (!state.running_mean || !state.running_var) throw ContractError("batch_norm needs running statistics");
  require_same(state.running_mean->shape(), cshape, "batch_norm running_mean");
  require_same(state.running_var->shape(), cshape, "batch_norm running_var");

  const Index plane = s.spatial();
  const Index count = Index(s.n) * plane;
  // (x - mean) * inv_std per channel
  Eigen::Matrix<S, Eigen::Dynamic, 1> mean_c(s.c), inv_std(s.c);
  for (int c = 0; c < s.c; ++c) {
    if (training) {
      // two-pass in double for stable statistics
      double m = 0.0;
      for (int n = 0; n < s.n; ++n) m += xv.vec().segment((Index(n) * s.c + c) * plane, plane).template cast<double>().sum();
      m /= double(count);
      double v = 0.0;
      for (int n = 0; n < s.n; ++n)
        v += (xv.vec().segment((Index(n) * s.c + c) * plane, plane).template cast<double>().array() - m).square().sum();
      const double biased = v / double(count);
      mean_c[c] = S(m);
      inv_std[c] = S(1.0 / std::sqrt(biased + double(state.eps)));
      const double unbiased = count > 1 ? v / double(count - 1) : biased;
      auto& rm = state.running_mean->vec()[c];
      auto& rv = state.running_var->vec()[c];
      rm = S((1.0 - double(state.momentum)) * double(rm) + double(state.momentum) * m);
      rv = S((1.0 - double(state.momentum)) * double(rv) + double(state.momentum) * unbiased);
    } else {
      mean_c[c] = state.running_mean->vec()[c];
      inv_std[c] = S(1) / std::sqrt(state.running_var->vec()[c] + state.eps);
    }
  }

  Tensor<S> xhat(s);
  Tensor<S> y(s);
  const auto& g = tape.value(gamma).vec();
  const auto& bt = tape.value(beta).vec();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Index off = (Index(n) * s.c + c) * plane;
      xhat.vec().segment(off, plane) = (xv.vec().segment(off, plane).array() - mean_c[c]) * inv_std[c];
      y.vec().segment(off, plane) = (xhat.vec().segment(off, plane).array() * g[c] + bt[c]).matrix();
    }

  return tape.record(std::move(y), {x, gamma, beta},
                     [=, xhat = std::move(xhat)](Tape<S>& tp, const Tensor<S>& gy) {
                       const auto& gv = tp.value(gamma).vec();
                       Tensor<S> dgamma(cshape), dbeta(cshape);
                       for (int n = 0; n < s.n; ++n)
                         for (int c = 0; c < s.c; ++c) {
                           const Index off = (Index(n) * s.c + c) * plane;
                           dbeta.vec()[c] += gy.vec().segment(off, plane).sum();
                           dgamma.vec()[c] += gy.vec().segment(off, plane).dot(xhat.vec().segment(off, plane));
                         }
                       if (tp.requires_grad(x)) {
                         Tensor<S> gx(s);
                         for (int n = 0; n < s.n; ++n)
                           for (int c = 0; c < s.c; ++c) {
                             const Index off = (Index(n) * s.c + c) * plane;
                             if (training) {
                               const S k = gv[c] * inv_std[c] / S(count);
                               gx.vec().segment(off, plane) =
                                   (k * (S(count) * gy.vec().segment(off, plane).array() - dbeta.vec()[c] -
                                         xhat.vec().segment(off, plane).array() * dgamma.vec()[c]))
                                       .matrix();
                             } else {
                               gx.vec().segment(off, plane) = gy.vec().segment(off, plane) * (gv[c] * inv_std[c]);
                             }
                           }
                         tp.accumulate(x, std::move(gx));
                       }
                       tp.accumulate(gamma, std::move(dgamma));
                       tp.accumulate(beta, std::move(dbeta));
                     });
}

template <typename S>
Var mul_constant(Tape<S>& tape, Var x, const Tensor<S>& c) {
  require_same(tape.shape(x), c.shape(), "mul_constant");
  Tensor<S> y(c.shape(), tape.value(x).vec().cwiseProduct(c.vec()));
  return tape.record(std::move(y), {x}, [x, c](Tape<S>& tp, const Tensor<S>& gy) {
    tp.accumulate(x, Tensor<S>(gy.shape(), gy.vec().cwiseProduct(c.vec())));
  });
}

template <typename S>
Var scale_positions_add_bias(Tape<S>& tape, Var y, Var bias, const Tensor<S>& scale_t, const Tensor<S>& keep) {
  const Shape5 s = tape.shape(y);
  const Shape5 pos{s.n, 1, s.t, s.h, s.w};
  require_same(scale_t.shape(), pos, "scale_positions_add_bias scale");
  require_same(keep.shape(), pos, "scale_positions_add_bias keep");
  if (bias.valid()) require_same(tape.shape(bias), Shape5{1, s.c, 1, 1, 1}, "scale_positions_add_bias bias");
  const Index plane = s.spatial();
  Tensor<S> out(s);
  const Tensor<S>& yv = tape.value(y);
  for (int n = 0; n < s.n; ++n) {
    const auto sc = scale_t.vec().segment(Index(n) * plane, plane);
    const auto kp = keep.vec().segment(Index(n) * plane, plane);
    for (int c = 0; c < s.c; ++c) {
      const Index off = (Index(n) * s.c + c) * plane;
      out.vec().segment(off, plane) = yv.vec().segment(off, plane).cwiseProduct(sc);
      if (bias.valid()) out.vec().segment(off, plane) += tape.value(bias).vec()[c] * kp;
    }
  }
  return tape.record(std::move(out), {y, bias}, [=](Tape<S>& tp, const Tensor<S>& g) {
    Tensor<S> gy(s);
    Tensor<S> gb(Shape5{1, s.c, 1, 1, 1});
    for (int n = 0; n < s.n; ++n) {
      const auto sc = scale_t.vec().segment(Index(n) * plane, plane);
      const auto kp = keep.vec().segment(Index(n) * plane, plane);
      for (int c = 0; c < s.c; ++c) {
        const Index off = (Index(n) * s.c + c) * plane;
        gy.vec().segment(off, plane) = g.vec().segment(off, plane).cwiseProduct(sc);
        gb.vec()[c] += g.vec().segment(off, plane).dot(kp);
      }
    }
    tp.accumulate(y, std::move(gy));
    if (bias.valid()) tp.accumulate(bias, std::move(gb));
  });
}

template <typename S>
Var add(Tape<S>& tape, Var a, Var b) {
  require_same(tape.shape(a), tape.shape(b), "add");
  Tensor<S> y(tape.shape(a), tape.value(a).vec() + tape.value(b).vec());
  return tape.record(std::move(y), {a, b}, [a, b](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

template <typename S>
Var mul(Tape<S>& tape, Var a, Var b) {
  require_same(tape.shape(a), tape.shape(b), "mul");
  Tensor<S> y(tape.shape(a), tape.value(a).vec().cwiseProduct(tape.value(b).vec()));
  return tape.record(std::move(y), {a, b}, [a, b](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate(a, Tensor<S>(g.shape(), g.vec().cwiseProduct(tp.value(b).vec())));
    tp.accumulate(b, Tensor<S>(g.shape(), g.vec().cwiseProduct(tp.value(a).vec())));
  });
}

template <typename S>
Var scale(Tape<S>& tape, Var x, S s) {
  Tensor<S> y(tape.shape(x), tape.value(x).vec() * s);
  return tape.record(std::move(y), {x}, [x, s](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate(x, Tensor<S>(g.shape(), g.vec() * s));
  });
}

template <typename S>
Var sum(Tape<S>& tape, Var x) {
  const Shape5 s = tape.shape(x);
  auto y = Tensor<S>::scalar(tape.value(x).vec().sum());
  return tape.record(std::move(y), {x}, [x, s](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate(x, Tensor<S>(s, g.item()));
  });
}

template <typename S>
Var mean(Tape<S>& tape, Var x) {
  const S n = S(tape.value(x).size());
  return scale(tape, sum(tape, x), S(1) / n);
}

template <typename S>
Var weighted_abs_sum(Tape<S>& tape, Var x, const Tensor<S>& target, const Tensor<S>& weight, S denom) {
  require_same(tape.shape(x), target.shape(), "weighted_abs_sum target");
  require_same(tape.shape(x), weight.shape(), "weighted_abs_sum weight");
  if (!(denom > S(0))) throw ContractError("weighted_abs_sum: denominator must be > 0");
  const auto& xv = tape.value(x).vec();
  // accumulate in double so float losses are order-stable and exact on small cases
  double total = 0.0;
  for (Index i = 0; i < xv.size(); ++i)
    total += std::abs(double(xv[i]) - double(target.vec()[i])) * double(weight.vec()[i]);
  auto y = Tensor<S>::scalar(S(total / double(denom)));
  return tape.record(std::move(y), {x}, [=](Tape<S>& tp, const Tensor<S>& g) {
    const auto& xv2 = tp.value(x).vec();
    Tensor<S> gx(tp.shape(x));
    const S k = g.item() / denom;
    for (Index i = 0; i < xv2.size(); ++i) {
      const S r = xv2[i] - target.vec()[i];
      const S sign = r > S(0) ? S(1) : (r < S(0) ? S(-1) : S(0));
      gx.vec()[i] = k * sign * weight.vec()[i];
    }
    tp.accumulate(x, std::move(gx));
  });
}

#define STINPAINT_INSTANTIATE_OPS(S)                                                                    \
  template Var upsample_nearest_to<S>(Tape<S>&, Var, int, int, int);                                 \
  template Var relu<S>(Tape<S>&, Var);                                                               \
  template Var leaky_relu<S>(Tape<S>&, Var, S);                                                      \
  template Var concat_channels<S>(Tape<S>&, Var, Var);                                               \
  template Var batch_norm<S>(Tape<S>&, Var, Var, Var, BatchNormState<S>, bool);                      \
  template Var mul_constant<S>(Tape<S>&, Var, const Tensor<S>&);                                     \
  template Var scale_positions_add_bias<S>(Tape<S>&, Var, Var, const Tensor<S>&, const Tensor<S>&); \
  template Var add<S>(Tape<S>&, Var, Var);                                                           \
  template Var mul<S>(Tape<S>&, Var, Var);                                                           \
  template Var scale<S>(Tape<S>&, Var, S);                                                           \
  template Var sum<S>(Tape<S>&, Var);                                                                \
  template Var mean<S>(Tape<S>&, Var);                                                               \
  template Var weighted_abs_sum<S>(Tape<S>&, Var, const Tensor<S>&, const Tensor<S>&, S);

STINPAINT_INSTANTIATE_OPS(float)
STINPAINT_INSTANTIATE_OPS(double)

}  // namespace stinpaint
