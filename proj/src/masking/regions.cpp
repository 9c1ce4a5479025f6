#include <algorithm>
#include <cmath>

#include "stinpaint/masking/masking.hpp"

namespace stinpaint {

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ParameterError("percentile of empty set");
  if (pct < 0.0 || pct > 100.0) throw ParameterError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<Region> threshold_regions(const FrameD& blurred, double pct) {
  if (blurred.size() == 0) throw ParameterError("threshold_regions: empty frame");
  const int rows = static_cast<int>(blurred.rows());
  const int cols = static_cast<int>(blurred.cols());
  const double tau = percentile(std::vector<double>(blurred.data(), blurred.data() + blurred.size()), pct);

  std::vector<std::uint8_t> candidate(blurred.size());
  for (Eigen::Index i = 0; i < blurred.size(); ++i) {
    const double v = blurred.data()[i];
    candidate[i] = v >= tau && v > 0.0;
  }

  std::vector<Region> regions;
  std::vector<std::uint8_t> seen(blurred.size(), 0);
  std::vector<int> stack;
  for (int start = 0; start < rows * cols; ++start) {
    if (!candidate[start] || seen[start]) continue;
    Region region;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      region.cells.push_back(cell);
      const int r = cell / cols, c = cell % cols;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
          const int n = nr * cols + nc;
          if (candidate[n] && !seen[n]) {
            seen[n] = 1;
            stack.push_back(n);
          }
        }
      }
    }
    std::sort(region.cells.begin(), region.cells.end());
    regions.push_back(std::move(region));
  }
  return regions;
}

}  // namespace stinpaint
