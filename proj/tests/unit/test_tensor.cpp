#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stinpaint/tensor/checkpoint.hpp"
#include "stinpaint/tensor/gradcheck.hpp"
#include "stinpaint/tensor/ops.hpp"

using namespace stinpaint;

namespace {

template <typename S>
Tensor<S> random_tensor(const Shape5& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<S> t(shape);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.vec()[i] = S(u(rng));
  return t;
}

// Direct seven-loop cross-correlation.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>* b,
                          const Conv3dParams& p) {
  const Shape5 os = conv3d_output_shape(x.shape(), w.shape(), p);
  const Shape5& xs = x.shape();
  const Shape5& ws = w.shape();
  Tensor<double> out(os);
  for (int n = 0; n < os.n; ++n)
    for (int co = 0; co < os.c; ++co)
      for (int t = 0; t < os.t; ++t)
        for (int h = 0; h < os.h; ++h)
          for (int v = 0; v < os.w; ++v) {
            double acc = b ? (*b)(0, co, 0, 0, 0) : 0.0;
            for (int ci = 0; ci < ws.c; ++ci)
              for (int a = 0; a < ws.t; ++a)
                for (int i = 0; i < ws.h; ++i)
                  for (int j = 0; j < ws.w; ++j) {
                    const int ti = t * p.stride[0] - p.padding[0] + a;
                    const int hi = h * p.stride[1] - p.padding[1] + i;
                    const int wi = v * p.stride[2] - p.padding[2] + j;
                    if (ti < 0 || hi < 0 || wi < 0 || ti >= xs.t || hi >= xs.h || wi >= xs.w) continue;
                    acc += w(co, ci, a, i, j) * x(n, ci, ti, hi, wi);
                  }
            out(n, co, t, h, v) = acc;
          }
  return out;
}

struct ConvCase {
  Shape5 x;
  Shape5 w;
  Conv3dParams p;
};

std::vector<ConvCase> conv_cases() {
  return {
      {{2, 3, 2, 7, 6}, {4, 3, 1, 3, 3}, {{1, 1, 1}, {0, 1, 1}}},  // stride-1 spatial kernel
      {{1, 2, 3, 5, 5}, {3, 2, 1, 5, 5}, {{1, 1, 1}, {0, 2, 2}}},
      {{2, 2, 1, 4, 9}, {2, 2, 1, 3, 3}, {{1, 1, 1}, {0, 0, 0}}},
      {{1, 2, 5, 4, 4}, {3, 2, 5, 3, 3}, {{2, 2, 2}, {2, 1, 1}}},  // strided temporal kernel
      {{2, 3, 3, 8, 8}, {2, 3, 3, 3, 3}, {{1, 1, 1}, {1, 1, 1}}},
      {{1, 1, 4, 9, 7}, {2, 1, 2, 4, 3}, {{1, 2, 1}, {0, 1, 2}}},
  };
}

}  // namespace

TEST(Conv3d, OutputShapeArithmetic) {
  const Conv3dParams p{{2, 2, 2}, {2, 1, 1}};
  const Shape5 out = conv3d_output_shape({1, 1, 5, 4, 4}, {1, 1, 5, 3, 3}, p);
  EXPECT_EQ(out, (Shape5{1, 1, 3, 2, 2}));
  EXPECT_THROW(conv3d_output_shape({1, 2, 5, 4, 4}, {1, 3, 1, 1, 1}, {}), ShapeError);
  EXPECT_THROW(conv3d_output_shape({1, 1, 1, 2, 2}, {1, 1, 1, 3, 3}, {}), ShapeError);
}

TEST(Conv3d, IdentityKernel) {
  const auto x = random_tensor<float>({2, 1, 3, 4, 5}, 1);
  const Tensor<float> w({1, 1, 1, 1, 1}, 1.0f);
  const Tensor<float> b({1, 1, 1, 1, 1}, 0.0f);
  EXPECT_EQ(conv3d_forward(x, w, &b, {}).vec(), x.vec());
}

TEST(Conv3d, OnesKernelCountsWindow) {
  const Tensor<float> x({1, 1, 1, 3, 3}, 1.0f);
  const Tensor<float> w({1, 1, 1, 3, 3}, 1.0f);
  const auto out = conv3d_forward<float>(x, w, nullptr, {});
  ASSERT_EQ(out.size(), 1);
  EXPECT_EQ(out.vec()[0], 9.0f);
  const Tensor<float> cube({1, 1, 4, 5, 6}, 1.0f);
  const auto counts = conv3d_forward<float>(cube, Tensor<float>({1, 1, 2, 3, 3}, 1.0f), nullptr, {});
  EXPECT_TRUE((counts.vec().array() == 18.0f).all());
}

TEST(Conv3d, MatchesNaiveReference) {
  std::uint64_t seed = 10;
  for (const auto& c : conv_cases()) {
    const auto x = random_tensor<double>(c.x, ++seed);
    const auto w = random_tensor<double>(c.w, ++seed);
    const auto b = random_tensor<double>({1, c.w.n, 1, 1, 1}, ++seed);
    const auto fast = conv3d_forward(x, w, &b, c.p);
    const auto ref = naive_conv(x, w, &b, c.p);
    ASSERT_EQ(fast.shape(), ref.shape());
    EXPECT_LT((fast.vec() - ref.vec()).cwiseAbs().maxCoeff(), 1e-12) << c.x.str() << " * " << c.w.str();
  }
}

TEST(Conv3d, TapedForwardMatchesKernel) {
  std::uint64_t seed = 40;
  for (const auto& c : conv_cases()) {
    const auto x = random_tensor<float>(c.x, ++seed);
    const auto w = random_tensor<float>(c.w, ++seed);
    Tape<float> tape;
    const Var out = conv3d(tape, tape.variable(x), tape.variable(w), Var{}, c.p);
    EXPECT_EQ(tape.value(out).vec(), conv3d_forward<float>(x, w, nullptr, c.p).vec());
  }
}

TEST(Conv3d, GradientsAgreeWithFiniteDifferences) {
  std::uint64_t seed = 70;
  for (const auto& c : conv_cases()) {
    const auto x = random_tensor<double>(c.x, ++seed);
    const auto w = random_tensor<double>(c.w, ++seed);
    const auto b = random_tensor<double>({1, c.w.n, 1, 1, 1}, ++seed);
    const auto probe = random_tensor<double>(conv3d_output_shape(c.x, c.w, c.p), ++seed);
    const ScalarFn fn = [&](Tape<double>& tape, const std::vector<Var>& in) {
      const Var y = conv3d(tape, in[0], in[1], in[2], c.p);
      return sum(tape, mul_constant(tape, y, probe));
    };
    const auto report = gradient_check(fn, {x, w, b}, 1e-4);
    EXPECT_TRUE(report.passed()) << c.x.str() << " max rel " << report.max_rel_error;
  }
}

TEST(Conv3d, WindowSumCountsValidCells) {
  Tensor<float> field({1, 1, 1, 3, 3}, 1.0f);
  field(0, 0, 0, 1, 1) = 0.0f;
  const auto out = window_sum(field, {1, 3, 3}, Conv3dParams{{1, 1, 1}, {0, 1, 1}});
  EXPECT_EQ(out(0, 0, 0, 0, 0), 3.0f);
  EXPECT_EQ(out(0, 0, 0, 1, 1), 8.0f);
  EXPECT_EQ(out(0, 0, 0, 0, 1), 5.0f);
}

TEST(Upsample, IdentityAndBroadcast) {
  const auto x = random_tensor<float>({1, 2, 2, 3, 3}, 3);
  Tape<float> tape;
  EXPECT_EQ(tape.value(upsample_nearest_to(tape, tape.constant(x), 2, 3, 3)).vec(), x.vec());
  const Var v = upsample_nearest_to(tape, tape.constant(Tensor<float>({1, 1, 1, 1, 1}, 2.5f)), 3, 4, 5);
  EXPECT_EQ(tape.shape(v), (Shape5{1, 1, 3, 4, 5}));
  EXPECT_TRUE((tape.value(v).vec().array() == 2.5f).all());
}

TEST(Upsample, IndexMapping) {
  Tensor<float> x({1, 1, 1, 1, 3});
  x.vec() << 1, 2, 3;
  Tape<float> tape;
  const Var v = upsample_nearest_to(tape, tape.constant(x), 1, 1, 7);
  Eigen::VectorXf expected(7);
  expected << 1, 1, 1, 2, 2, 3, 3;  // floor(d * 3 / 7)
  EXPECT_EQ(tape.value(v).vec(), expected);
}

TEST(Upsample, GradientMassConserved) {
  const auto x = random_tensor<double>({2, 2, 1, 2, 3}, 4);
  const auto g = random_tensor<double>({2, 2, 3, 5, 6}, 5);
  Tape<double> tape;
  const Var in = tape.variable(x);
  tape.backward(sum(tape, mul_constant(tape, upsample_nearest_to(tape, in, 3, 5, 6), g)));
  EXPECT_NEAR(tape.grad(in).vec().sum(), g.vec().sum(), 1e-12);
}

TEST(Activations, Values) {
  Tensor<float> x({1, 1, 1, 1, 2});
  x.vec() << -3.0f, 3.0f;
  Tape<float> tape;
  const Var in = tape.constant(x);
  EXPECT_EQ(tape.value(relu(tape, in)).vec(), Eigen::Vector2f(0.0f, 3.0f));
  EXPECT_EQ(tape.value(leaky_relu(tape, in, 0.2f)).vec(), Eigen::Vector2f(-3.0f * 0.2f, 3.0f));
}

TEST(Concat, OrderAndGradientSplit) {
  const auto a = random_tensor<double>({2, 2, 1, 2, 2}, 6);
  const auto b = random_tensor<double>({2, 3, 1, 2, 2}, 7);
  Tape<double> tape;
  const Var va = tape.variable(a), vb = tape.variable(b);
  const Var c = concat_channels(tape, va, vb);
  ASSERT_EQ(tape.shape(c).c, 5);
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(tape.value(c)(n, 1, 0, k / 2, k % 2), a(n, 1, 0, k / 2, k % 2));
      EXPECT_EQ(tape.value(c)(n, 4, 0, k / 2, k % 2), b(n, 2, 0, k / 2, k % 2));
    }
  const auto probe = random_tensor<double>(tape.shape(c), 8);
  tape.backward(sum(tape, mul_constant(tape, c, probe)));
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(tape.grad(va)(n, 0, 0, k / 2, k % 2), probe(n, 0, 0, k / 2, k % 2));
      EXPECT_EQ(tape.grad(vb)(n, 0, 0, k / 2, k % 2), probe(n, 2, 0, k / 2, k % 2));
    }
  EXPECT_THROW(concat_channels(tape, va, tape.constant(Tensor<double>({2, 1, 1, 3, 2}))), ShapeError);
}

TEST(BatchNorm, TrainModeStandardizes) {
  const auto x = random_tensor<double>({3, 2, 2, 4, 4}, 9, -5.0, 20.0);
  Tensor<double> rm({1, 2, 1, 1, 1}, 0.0), rv({1, 2, 1, 1, 1}, 1.0);
  Tape<double> tape;
  const Var y = batch_norm(tape, tape.constant(x), tape.constant(Tensor<double>({1, 2, 1, 1, 1}, 1.0)),
                           tape.constant(Tensor<double>({1, 2, 1, 1, 1}, 0.0)),
                           BatchNormState<double>{&rm, &rv}, true);
  const auto& out = tape.value(y);
  for (int c = 0; c < 2; ++c) {
    double s = 0.0, s2 = 0.0;
    int n = 0;
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 32; ++k) {
        const double v = out(b, c, k / 16, (k / 4) % 4, k % 4);
        s += v;
        s2 += v * v;
        ++n;
      }
    EXPECT_NEAR(s / n, 0.0, 1e-5);
    EXPECT_NEAR(s2 / n, 1.0, 1e-5);
  }
  EXPECT_NE(rm(0, 0, 0, 0, 0), 0.0);
}

TEST(BatchNorm, EvalModeUsesRunningStats) {
  Tensor<double> x({1, 1, 1, 1, 2});
  x.vec() << 3.0, 5.0;
  Tensor<double> rm({1, 1, 1, 1, 1}, 1.0), rv({1, 1, 1, 1, 1}, 4.0);
  Tape<double> tape;
  const Var y = batch_norm(tape, tape.constant(x), tape.constant(Tensor<double>::scalar(2.0)),
                           tape.constant(Tensor<double>::scalar(0.5)), BatchNormState<double>{&rm, &rv}, false);
  EXPECT_NEAR(tape.value(y).vec()[0], 2.0 * 2.0 / std::sqrt(4.0 + 1e-5) + 0.5, 1e-12);
  EXPECT_EQ(rm.vec()[0], 1.0);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParamStore<float> store;
  store.add_parameter("w", random_tensor<float>({1, 1, 1, 2, 2}, 11));
  const auto before = store.value("w").vec();
  adam_step(store, {{"w", Tensor<float>({1, 1, 1, 2, 2}, 0.0f)}}, 0.01);
  EXPECT_EQ(store.value("w").vec(), before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore<double> store;
  store.add_parameter("x", Tensor<double>::scalar(1.0));
  adam_step(store, {{"x", Tensor<double>::scalar(1.0)}}, 0.01);
  // m_hat = 1, v_hat = 1: step = lr / (1 + eps)
  EXPECT_NEAR(store.value("x").item(), 1.0 - 0.01 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(store.step(), 1);
}

TEST(Adam, MissingGradientIsContractError) {
  ParamStore<float> store;
  store.add_parameter("a", Tensor<float>::scalar(1.0f));
  store.add_parameter("b", Tensor<float>::scalar(1.0f));
  EXPECT_THROW(adam_step(store, {{"a", Tensor<float>::scalar(1.0f)}}, 0.01), ContractError);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    ParamStore<float> store;
    store.add_parameter("w", random_tensor<float>({1, 1, 1, 3, 3}, 12));
    for (int i = 0; i < 5; ++i) adam_step(store, {{"w", random_tensor<float>({1, 1, 1, 3, 3}, 100 + i)}}, 0.01);
    return store.value("w").vec();
  };
  EXPECT_EQ(run(), run());
}

TEST(Checkpoint, RoundTrip) {
  ParamStore<float> store;
  store.add_parameter("conv.w", random_tensor<float>({2, 1, 1, 3, 3}, 13));
  store.add_buffer("bn.mean", random_tensor<float>({1, 2, 1, 1, 1}, 14));
  adam_step(store, {{"conv.w", random_tensor<float>({2, 1, 1, 3, 3}, 15)}}, 0.01);
  auto entries = store_to_entries(store);
  entries.push_back(scalar_entry("meta/iter", 17.0f));
  std::stringstream buf;
  write_uckp(buf, entries);
  EXPECT_EQ(buf.str().substr(0, 5), std::string("UCKP\x01", 5));
  const auto back = read_uckp(buf);
  ASSERT_NE(find_entry(back, "meta/iter"), nullptr);
  EXPECT_EQ(find_entry(back, "meta/iter")->values[0], 17.0f);

  ParamStore<float> fresh;
  fresh.add_parameter("conv.w", Tensor<float>({2, 1, 1, 3, 3}));
  fresh.add_buffer("bn.mean", Tensor<float>({1, 2, 1, 1, 1}));
  entries_to_store(back, fresh);
  EXPECT_EQ(fresh.value("conv.w").vec(), store.value("conv.w").vec());
  EXPECT_EQ(fresh.value("bn.mean").vec(), store.value("bn.mean").vec());
  EXPECT_EQ(fresh.entry("conv.w").second_moment.vec(), store.entry("conv.w").second_moment.vec());
  EXPECT_EQ(fresh.step(), 1);
}

TEST(Checkpoint, RejectsMismatchAndCorruption) {
  ParamStore<float> store;
  store.add_parameter("w", Tensor<float>({1, 1, 1, 2, 2}, 1.0f));
  std::stringstream buf;
  write_uckp(buf, store_to_entries(store));
  const std::string bytes = buf.str();

  ParamStore<float> other;
  other.add_parameter("w", Tensor<float>({1, 1, 1, 3, 3}));
  std::istringstream in(bytes);
  EXPECT_THROW(entries_to_store(read_uckp(in), other), FormatError);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 2));
  EXPECT_THROW(read_uckp(truncated), FormatError);
  std::istringstream magic("UCKQ" + bytes.substr(4));
  EXPECT_THROW(read_uckp(magic), FormatError);
}

TEST(GradCheck, LinearFunctionIsExact) {
  const auto w = random_tensor<double>({1, 1, 1, 4, 4}, 16);
  const auto x = random_tensor<double>({1, 1, 1, 4, 4}, 17);
  const ScalarFn fn = [&](Tape<double>& tape, const std::vector<Var>& in) {
    return sum(tape, mul_constant(tape, in[0], w));
  };
  const auto report = gradient_check(fn, {x}, 1e-10);
  EXPECT_TRUE(report.passed());
  EXPECT_LT(report.max_rel_error, 1e-10);
  EXPECT_EQ(report.coordinates, 16u);
}

TEST(GradCheck, ToyLeakyNet) {
  const ScalarFn fn = [](Tape<double>& tape, const std::vector<Var>& in) {
    Var h = leaky_relu(tape, conv3d(tape, in[0], in[1], Var{}, Conv3dParams{{1, 1, 1}, {0, 1, 1}}), 0.2);
    h = leaky_relu(tape, conv3d(tape, h, in[2], Var{}, Conv3dParams{{1, 2, 2}, {0, 1, 1}}), 0.2);
    return mean(tape, conv3d(tape, h, in[3], Var{}, {}));
  };
  // Central differences are only meaningful when no perturbation crosses a
  // kink, so draws with a pre-activation near zero are skipped.
  const auto clear_of_kinks = [](const std::vector<Tensor<double>>& in) {
    Tape<double> tape;
    const Var z1 = conv3d(tape, tape.constant(in[0]), tape.constant(in[1]), Var{}, Conv3dParams{{1, 1, 1}, {0, 1, 1}});
    const Var z2 = conv3d(tape, leaky_relu(tape, z1, 0.2), tape.constant(in[2]), Var{},
                          Conv3dParams{{1, 2, 2}, {0, 1, 1}});
    return tape.value(z1).vec().cwiseAbs().minCoeff() > 0.03 && tape.value(z2).vec().cwiseAbs().minCoeff() > 0.03;
  };
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 20 && seed < 400; ++seed) {
    const std::vector<Tensor<double>> in{
        random_tensor<double>({1, 2, 2, 4, 4}, 1000 + seed), random_tensor<double>({2, 2, 1, 3, 3}, 2000 + seed),
        random_tensor<double>({2, 2, 2, 3, 3}, 3000 + seed), random_tensor<double>({1, 2, 1, 1, 1}, 4000 + seed)};
    if (!clear_of_kinks(in)) continue;
    ++checked;
    const auto report = gradient_check(fn, in, 1e-4);
    EXPECT_TRUE(report.passed()) << "seed " << seed << " max rel " << report.max_rel_error;
  }
  EXPECT_EQ(checked, 20);
}

TEST(GradCheck, BatchNormAndWeightedAbs) {
  const auto x = random_tensor<double>({2, 2, 1, 3, 3}, 18);
  const auto target = random_tensor<double>({2, 2, 1, 3, 3}, 19, 5.0, 6.0);
  const auto weight = random_tensor<double>({2, 2, 1, 3, 3}, 20, 0.0, 1.0);
  const ScalarFn fn = [&](Tape<double>& tape, const std::vector<Var>& in) {
    Tensor<double> rm({1, 2, 1, 1, 1}, 0.0), rv({1, 2, 1, 1, 1}, 1.0);
    const Var y = batch_norm(tape, in[0], in[1], in[2], BatchNormState<double>{&rm, &rv}, true);
    return weighted_abs_sum(tape, y, target, weight, 3.0);
  };
  const auto report = gradient_check(
      fn, {x, random_tensor<double>({1, 2, 1, 1, 1}, 21, 0.5, 1.5), random_tensor<double>({1, 2, 1, 1, 1}, 22)}, 1e-4);
  EXPECT_TRUE(report.passed()) << report.max_rel_error;
}

TEST(GradCheck, ReportsOffenders) {
  // relu at an exact kink: analytic 0 vs numeric 0.5.
  const ScalarFn fn = [](Tape<double>& tape, const std::vector<Var>& in) { return sum(tape, relu(tape, in[0])); };
  const auto report = gradient_check(fn, {Tensor<double>::scalar(0.0)}, 1e-4);
  EXPECT_FALSE(report.passed());
  ASSERT_EQ(report.offenders.size(), 1u);
  EXPECT_NEAR(report.offenders[0].numeric, 0.5, 1e-12);
}

TEST(Tape, BackwardTwiceIsBitIdentical) {
  const auto x = random_tensor<float>({2, 2, 1, 6, 6}, 23);
  const auto w = random_tensor<float>({3, 2, 1, 3, 3}, 24);
  Tape<float> tape;
  const Var vx = tape.variable(x), vw = tape.variable(w);
  const Var loss = mean(tape, leaky_relu(tape, conv3d(tape, vx, vw, Var{}, Conv3dParams{{1, 1, 1}, {0, 1, 1}}), 0.2f));
  tape.backward(loss);
  const auto g1 = tape.grad(vw).vec();
  tape.backward(loss);
  EXPECT_EQ(tape.grad(vw).vec(), g1);
}
