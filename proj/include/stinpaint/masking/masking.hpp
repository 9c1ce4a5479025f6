#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stinpaint/common/kv_config.hpp"
#include "stinpaint/data/volume.hpp"

namespace stinpaint {

using FrameD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// 2D hole map, 1 = hole.
using HoleMap = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskRng = std::mt19937_64;

struct MaskGenConfig {
  int walk_steps = 300;
  int brush_radius = 1;
  double blur_sigma = 2.0;
  double threshold_percentile = 90.0;
  bool per_frame_independent = true;

  void validate() const;
  static MaskGenConfig from_config(const KvConfig& cfg);
  KvConfig to_config() const;
};

/// Separable Gaussian with half-width ceil(3 sigma), normalized weights and
/// half-sample symmetric padding (edge cell repeated).
FrameD gaussian_blur(const FrameD& frame, double sigma);

/// Normalized 1D kernel used by gaussian_blur.
Eigen::VectorXd gaussian_kernel(double sigma);

/// One 8-connected component; `cells` holds row-major linear indices in
/// ascending order.
struct Region {
  std::vector<int> cells;
};

/// Linear-interpolated order statistic (numpy's default percentile).
double percentile(std::vector<double> values, double pct);

/// Components of {v >= tau, v > 0} where tau is the given percentile of the
/// frame. Components are ordered by their smallest cell index. An empty result
/// means there is no positive candidate cell and callers must fall back to
/// uniform seeding.
std::vector<Region> threshold_regions(const FrameD& blurred, double pct);

/// Random walk of uniform 4-connected moves clamped to the grid, painting a
/// square brush at the start and after every step.
HoleMap random_walk_mask(int rows, int cols, int start_row, int start_col, const MaskGenConfig& cfg, MaskRng& rng);

/// Uniform seeding + random walk per frame (or one frame replicated).
MaskBlock random_mask_block(int frames, int rows, int cols, const MaskGenConfig& cfg, MaskRng& rng);

/// Seeds each frame's walk inside the blurred, thresholded dense regions,
/// choosing a region with probability proportional to its cell count.
MaskBlock biased_mask_block(const GridBlock& block, const MaskGenConfig& cfg, MaskRng& rng);

/// Start cell selection used by biased masking, exposed for statistical tests.
/// Returns the row-major cell index, or -1 when the frame has no candidate.
int biased_start_cell(const FrameD& frame, const MaskGenConfig& cfg, MaskRng& rng);

struct ScenarioMask {
  MaskBlock mask;
  double hole_ratio = 0.0;  // holes / valid cells of the 2D mask
};

/// Loads a (1, H, W) u8 mask and replicates it across `frames`.
ScenarioMask load_scenario_mask(const std::string& path, int frames);
ScenarioMask replicate_mask(const MaskBlock& mask2d, int frames);

/// Deterministic per-sample generator: mixes a base seed with stream indices.
MaskRng indexed_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace stinpaint
