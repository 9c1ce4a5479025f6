#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stinpaint/tensor/tape.hpp"

namespace stinpaint {

struct GradOffender {
  std::size_t input = 0;
  Eigen::Index coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::vector<GradOffender> offenders;
  bool passed() const { return offenders.empty(); }
};

/// Builds a scalar from the given input variables on a fresh tape.
using ScalarFn = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients of a scalar function against central
/// differences. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-8); coordinates above rel_tol are reported.
GradCheckReport gradient_check(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs, double rel_tol,
                               double step = 1e-3, const std::string& name = "");

}  // namespace stinpaint
