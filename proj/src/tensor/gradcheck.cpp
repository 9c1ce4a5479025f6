#include "stinpaint/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace stinpaint {
namespace {

double evaluate(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.constant(x));
  return tape.value(fn(tape, vars)).item();
}

}  // namespace

GradCheckReport gradient_check(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs, double rel_tol,
                               double step, const std::string& name) {
  GradCheckReport report;
  report.name = name;

  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.variable(x));
  const Var out = fn(tape, vars);
  tape.backward(out);

  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor<double> analytic = tape.grad(vars[i]);
    for (Eigen::Index k = 0; k < inputs[i].size(); ++k) {
      const double x0 = inputs[i].vec()[k];
      probe[i].vec()[k] = x0 + step;
      const double up = evaluate(fn, probe);
      probe[i].vec()[k] = x0 - step;
      const double down = evaluate(fn, probe);
      probe[i].vec()[k] = x0;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.vec()[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.coordinates;
      if (rel > rel_tol) report.offenders.push_back({i, k, a, numeric, rel});
    }
  }
  return report;
}

}  // namespace stinpaint
