#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "stinpaint/data/grid.hpp"

namespace stinpaint {

/// Mean |pred - gt| over hole voxels (mask == 0).
double l1_hole(const GridBlock& pred, const GridBlock& gt, const MaskBlock& mask);
/// Mean (pred - gt)^2 over hole voxels.
double l2_hole(const GridBlock& pred, const GridBlock& gt, const MaskBlock& mask);

/// Gaussian-window SSIM (11x11, sigma 1.5) averaged over the window
/// positions that fit inside the frame.
double ssim_frame(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                  double data_range);
/// Mean of per-frame SSIM.
double ssim(const GridBlock& pred, const GridBlock& gt, double data_range);

/// 10 log10(peak^2 / MSE) over all voxels; +inf when MSE is 0.
double psnr(const GridBlock& pred, const GridBlock& gt, double peak);

struct BlockMetrics {
  double l1_hole = 0.0;
  double l2_hole = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
};

struct MetricReport {
  std::vector<BlockMetrics> blocks;
  BlockMetrics mean;

  void write_csv(std::ostream& out) const;  // block_index,l1_hole,l2_hole,ssim,psnr
};

/// Scores every block; `data_range` is used for both SSIM and PSNR.
MetricReport evaluate_blocks(const std::vector<GridBlock>& preds, const std::vector<GridBlock>& gts,
                             const std::vector<MaskBlock>& masks, double data_range);

/// Largest ground-truth value over a set of blocks (the dataset peak).
double data_peak(const std::vector<GridBlock>& gts);

struct ErrorMap {
  Eigen::MatrixXd value;                                        // signed mean of pred - gt
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> count;  // holed frames per cell

  GridBlock as_block() const;
};

/// Per cell, mean of (pred - gt) over the frames where the cell is a hole.
ErrorMap spatial_error_map(const std::vector<GridBlock>& preds, const std::vector<GridBlock>& gts,
                           const std::vector<MaskBlock>& masks);

/// Binary 8-bit images.
void write_error_ppm(std::ostream& out, const ErrorMap& map);
void write_error_ppm(const std::string& path, const ErrorMap& map);
void write_heatmap_pgm(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& frame, double max_value);
void write_heatmap_pgm(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& frame, double max_value);

struct ScenarioSpec {
  std::string name;
  std::string mask_path;
  int start_frame = 0;
  int end_frame = 0;  // exclusive

  /// Relative mask paths resolve against the spec file's directory.
  static ScenarioSpec load(const std::string& path);
};

/// Fills the holes of one T-frame block. `first_frame` is the block's index
/// in the series, so time-aware imputers can recover the hour of day.
using Imputer = std::function<GridBlock(const GridBlock& block, const MaskBlock& mask, int first_frame)>;

/// Runs the imputer over consecutive T-frame windows of `input`. When the
/// frame count is not a multiple of T, the last window is the final T frames
/// and only its not-yet-covered frames are kept. `first_frame` is the series
/// index of input frame 0.
GridBlock impute_windows(const Imputer& imputer, const GridBlock& input, const MaskBlock& mask, int t,
                         int first_frame = 0);

struct ScenarioPoint {
  int hour = 0;  // frame offset from the period start
  double gt_mean = 0.0;
  double pred_mean = 0.0;
};

struct ScenarioResult {
  std::vector<ScenarioPoint> series;
  double mean_abs_error = 0.0;  // per hole voxel over the whole period

  void write_csv(std::ostream& out) const;  // hour,gt_mean,pred_mean
};

/// Imputes [start, end) of the series with impute_windows under a static 2D
/// mask and records per-frame spatial means over the holed cells.
ScenarioResult scenario_run(const Imputer& imputer, const GridSeries& series, const MaskBlock& mask2d, int start_frame,
                            int end_frame, int t);
ScenarioResult scenario_run(const Imputer& imputer, const GridSeries& series, const ScenarioSpec& spec, int t);

}  // namespace stinpaint
