#pragma once

#include <cstdint>
#include <vector>

#include "stinpaint/tensor/gradcheck.hpp"
#include "stinpaint/tensor/ops.hpp"

namespace stinpaint {

template <typename Scalar>
struct LossTerms {
  Var total;
  Var hole;
  Var valid;
};

/// L_total = L_valid + lambda * L_hole with
///   L_hole  = sum(|(1 - M) * (out - gt)|) / N_hole
///   L_valid = sum(|M * (out - gt)|) / N_valid.
/// Counts run over the whole batch. N_hole = 0 gives L_hole = 0; N_valid = 0
/// throws ContractError.
template <typename Scalar>
LossTerms<Scalar> inpainting_loss(Tape<Scalar>& tape, Var prediction, const Tensor<Scalar>& ground_truth,
                                  const Tensor<Scalar>& mask, Scalar lambda_hole);

/// Gradient-check suite over the differentiable building blocks; returns one
/// report per check (double precision, central differences, step 1e-3).
std::vector<GradCheckReport> run_gradient_suite(std::uint64_t seed, double rel_tol = 1e-4);

}  // namespace stinpaint
