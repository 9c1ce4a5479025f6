#include <cmath>

#include "stinpaint/masking/masking.hpp"

namespace stinpaint {
namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n-1. Repeats for offsets
// wider than the frame.
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

Eigen::VectorXd gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian_blur: sigma must be > 0");
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd k(2 * half + 1);
  for (int i = -half; i <= half; ++i) k[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
  return k / k.sum();
}

FrameD gaussian_blur(const FrameD& frame, double sigma) {
  const Eigen::VectorXd k = gaussian_kernel(sigma);
  const int half = static_cast<int>(k.size() / 2);
  const int rows = static_cast<int>(frame.rows());
  const int cols = static_cast<int>(frame.cols());

  FrameD horiz(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int o = -half; o <= half; ++o) acc += k[o + half] * frame(r, reflect(c + o, cols));
      horiz(r, c) = acc;
    }
  }
  FrameD out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int o = -half; o <= half; ++o) acc += k[o + half] * horiz(reflect(r + o, rows), c);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace stinpaint
