#include "stinpaint/nn/loss.hpp"

#include <random>

#include "stinpaint/nn/partial_conv.hpp"
#include "stinpaint/tensor/gradcheck.hpp"

namespace stinpaint {

template <typename S>
LossTerms<S> inpainting_loss(Tape<S>& tape, Var prediction, const Tensor<S>& gt, const Tensor<S>& mask, S lambda) {
  if (lambda < S(0)) throw ParameterError("lambda must be >= 0");
  const Eigen::Index valid = static_cast<Eigen::Index>(mask.vec().sum());
  const Eigen::Index holes = mask.size() - valid;
  if (valid == 0) throw ContractError("loss: mask has no valid voxels");
  const Tensor<S> hole_weight(mask.shape(), (S(1) - mask.vec().array()).matrix());

  LossTerms<S> terms;
  terms.valid = weighted_abs_sum(tape, prediction, gt, mask, S(valid));
  terms.hole = holes > 0 ? weighted_abs_sum(tape, prediction, gt, hole_weight, S(holes))
                         : tape.constant(Tensor<S>::scalar(S(0)));
  terms.total = add(tape, terms.valid, scale(tape, terms.hole, lambda));
  return terms;
}

template LossTerms<float> inpainting_loss<float>(Tape<float>&, Var, const Tensor<float>&, const Tensor<float>&,
                                                 float);
template LossTerms<double> inpainting_loss<double>(Tape<double>&, Var, const Tensor<double>&, const Tensor<double>&,
                                                   double);

namespace {

Tensor<double> random_tensor(const Shape5& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(s);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.vec()[i] = d(rng);
  return t;
}

// Values bounded away from zero so leaky-relu kinks are not straddled.
Tensor<double> away_from_zero(const Shape5& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> t(s);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.vec()[i] = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

Tensor<double> random_mask(const Shape5& s, std::mt19937_64& rng, double p_valid) {
  std::bernoulli_distribution d(p_valid);
  Tensor<double> t(s);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.vec()[i] = d(rng) ? 1.0 : 0.0;
  t.vec()[0] = 1.0;
  return t;
}

// Fixed random projection turns a tensor into a scalar with nonuniform gradient.
Var project(Tape<double>& tape, Var x, const Tensor<double>& weights) {
  return sum(tape, mul(tape, x, tape.constant(weights)));
}

}  // namespace

std::vector<GradCheckReport> run_gradient_suite(std::uint64_t seed, double rel_tol) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckReport> reports;

  {
    const Shape5 xs{2, 2, 3, 5, 4}, ws{3, 2, 2, 3, 3};
    Conv3dParams p{{1, 2, 1}, {1, 1, 0}};
    const Shape5 ys = conv3d_output_shape(xs, ws, p);
    const auto proj = random_tensor(ys, rng);
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) { return project(t, conv3d(t, v[0], v[1], v[2], p), proj); },
        {random_tensor(xs, rng), random_tensor(ws, rng), random_tensor(Shape5{1, 3, 1, 1, 1}, rng)}, rel_tol, 1e-3,
        "conv3d"));
  }
  {
    const Shape5 xs{2, 2, 2, 5, 5}, ws{2, 2, 1, 3, 3};
    Conv3dParams p{{1, 2, 2}, {0, 1, 1}};
    const auto mask = random_mask(xs, rng, 0.6);
    const Shape5 ys = conv3d_output_shape(xs, ws, p);
    const auto proj = random_tensor(ys, rng);
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) {
          return project(t, partial_conv3d(t, v[0], mask, v[1], v[2], p).output, proj);
        },
        {random_tensor(xs, rng), random_tensor(ws, rng), random_tensor(Shape5{1, 2, 1, 1, 1}, rng)}, rel_tol, 1e-3,
        "partial_conv3d"));
  }
  {
    const Shape5 xs{3, 2, 2, 3, 3};
    Tensor<double> rm(Shape5{1, 2, 1, 1, 1}, 0.0), rv(Shape5{1, 2, 1, 1, 1}, 1.0);
    const auto proj = random_tensor(xs, rng);
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) {
          BatchNormState<double> st{&rm, &rv};
          return project(t, batch_norm(t, v[0], v[1], v[2], st, true), proj);
        },
        {random_tensor(xs, rng, -2.0, 3.0), random_tensor(Shape5{1, 2, 1, 1, 1}, rng, 0.5, 1.5),
         random_tensor(Shape5{1, 2, 1, 1, 1}, rng)},
        rel_tol, 1e-3, "batch_norm"));
  }
  {
    // conv -> leaky_relu -> conv -> leaky_relu -> conv, checked on weights only
    // with inputs chosen so activations stay clear of zero.
    const Shape5 xs{1, 1, 1, 4, 4};
    const Shape5 w1{2, 1, 1, 3, 3}, w2{2, 2, 1, 3, 3}, w3{1, 2, 1, 1, 1};
    Conv3dParams p{{1, 1, 1}, {0, 1, 1}};
    const auto x = away_from_zero(xs, rng);
    const auto proj = random_tensor(Shape5{1, 1, 1, 4, 4}, rng);
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) {
          Var h = leaky_relu(t, conv3d(t, t.constant(x), v[0], Var{}, p), 0.2);
          h = leaky_relu(t, conv3d(t, h, v[1], Var{}, p), 0.2);
          return project(t, conv3d(t, h, v[2], Var{}, Conv3dParams{}), proj);
        },
        {random_tensor(w1, rng), random_tensor(w2, rng), random_tensor(w3, rng)}, rel_tol, 1e-3, "leaky_relu_net"));
  }
  {
    const Shape5 s{2, 1, 2, 3, 3};
    const auto gt = random_tensor(s, rng);
    const auto mask = random_mask(s, rng, 0.5);
    // prediction offsets of at least 0.1 keep every residual away from zero
    auto pred = away_from_zero(s, rng);
    pred.vec() += gt.vec();
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) { return inpainting_loss(t, v[0], gt, mask, 12.0).total; },
        {pred}, rel_tol, 1e-3, "hole_valid_l1_loss"));
  }
  {
    const Shape5 xs{1, 2, 2, 2, 3};
    const auto proj = random_tensor(Shape5{1, 2, 3, 5, 4}, rng);
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) { return project(t, upsample_nearest_to(t, v[0], 3, 5, 4), proj); },
        {random_tensor(xs, rng)}, rel_tol, 1e-3, "upsample_nearest"));
  }
  {
    const auto proj = random_tensor(Shape5{1, 5, 1, 2, 2}, rng);
    reports.push_back(gradient_check(
        [&](Tape<double>& t, const std::vector<Var>& v) { return project(t, concat_channels(t, v[0], v[1]), proj); },
        {random_tensor(Shape5{1, 2, 1, 2, 2}, rng), random_tensor(Shape5{1, 3, 1, 2, 2}, rng)}, rel_tol, 1e-3,
        "concat_channels"));
  }
  return reports;
}

}  // namespace stinpaint
