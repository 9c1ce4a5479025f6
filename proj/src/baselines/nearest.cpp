#include <algorithm>
#include <array>
#include <vector>

#include "stinpaint/baselines/baselines.hpp"

namespace stinpaint {
namespace {

struct Offset {
  int d2;
  int dt, dr, dc;
};

std::vector<Offset> sorted_offsets(int t_extent, int rows, int cols) {
  std::vector<Offset> out;
  for (int dt = -(t_extent - 1); dt <= t_extent - 1; ++dt)
    for (int dr = -(rows - 1); dr <= rows - 1; ++dr)
      for (int dc = -(cols - 1); dc <= cols - 1; ++dc) out.push_back({dt * dt + dr * dr + dc * dc, dt, dr, dc});
  std::stable_sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) { return a.d2 < b.d2; });
  return out;
}

// Scans offset shells of equal squared distance; the first shell holding a
// valid voxel decides, and within it the lexicographically smallest
// (t, row, col) wins.
float nearest_value(const GridBlock& block, const MaskBlock& mask, const std::vector<Offset>& offsets, int t, int r,
                    int c, int t_lo, int t_hi) {
  std::size_t i = 0;
  while (i < offsets.size()) {
    const int d2 = offsets[i].d2;
    bool found = false;
    std::array<int, 3> best{};
    for (; i < offsets.size() && offsets[i].d2 == d2; ++i) {
      const int tt = t + offsets[i].dt, rr = r + offsets[i].dr, cc = c + offsets[i].dc;
      if (tt < t_lo || tt >= t_hi || rr < 0 || rr >= block.rows() || cc < 0 || cc >= block.cols()) continue;
      if (!mask(tt, rr, cc)) continue;
      const std::array<int, 3> cand{tt, rr, cc};
      if (!found || cand < best) {
        best = cand;
        found = true;
      }
    }
    if (found) return block(best[0], best[1], best[2]);
  }
  throw ImputerError("nearest-neighbour imputation: no valid voxel in scope");
}

}  // namespace

GridBlock nn_impute(const GridBlock& block, const MaskBlock& mask, ImputeScope scope) {
  if (!block.same_shape(mask)) throw ShapeError("nn_impute: block and mask shapes differ");
  const bool volumetric = scope == ImputeScope::k3D;
  const auto offsets = sorted_offsets(volumetric ? block.frames() : 1, block.rows(), block.cols());
  GridBlock out = block;
  for (int t = 0; t < block.frames(); ++t) {
    const int t_lo = volumetric ? 0 : t;
    const int t_hi = volumetric ? block.frames() : t + 1;
    for (int r = 0; r < block.rows(); ++r)
      for (int c = 0; c < block.cols(); ++c)
        if (!mask(t, r, c)) out(t, r, c) = nearest_value(block, mask, offsets, t, r, c, t_lo, t_hi);
  }
  return out;
}

}  // namespace stinpaint
