#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stinpaint/data/grid.hpp"

namespace stinpaint {

/// Per-pixel, per-hour-of-day training means.
struct MeanTable {
  GridBlock means;                 // 24 x H x W
  Eigen::Matrix<std::int64_t, 24, 1> counts = Eigen::Matrix<std::int64_t, 24, 1>::Zero();  // frames per hour
};

MeanTable fit_global_mean(const GridSeries& train);

/// Hole voxels take table[hour][cell]; frame k of the block is at hour
/// (first_hour + k * bin_hours) mod 24. Valid voxels are copied unchanged.
GridBlock impute_global_mean(const MeanTable& table, const GridBlock& block, const MaskBlock& mask, int first_hour,
                             int bin_hours = 1);

/// Single-frame form: hour_of_day must lie in 0..23.
GridBlock predict_global_mean(const MeanTable& table, const GridBlock& frame, const MaskBlock& mask, int hour_of_day);

void write_mean_table(const std::string& path, const MeanTable& table);
MeanTable read_mean_table(const std::string& path);

enum class ImputeScope { k2D = 2, k3D = 3 };

/// Nearest valid voxel by Euclidean distance in index space (all axes unit
/// spaced). Ties go to the smallest t, then row, then column. 2D searches
/// within each frame; 3D searches the whole block.
GridBlock nn_impute(const GridBlock& block, const MaskBlock& mask, ImputeScope scope);

struct RbfConfig {
  int sample_count = 500;
  std::uint64_t seed = 0;
  double regularization = 1e-8;
};

/// Thin-plate spline (r^2 log r) with a linear tail through scattered
/// (t, row, col) sites. 2D splines ignore the t coordinate.
class ThinPlateSpline {
 public:
  /// Throws ImputerError when the system is singular or too few sites are given.
  ThinPlateSpline(std::vector<Eigen::Vector3d> sites, const Eigen::VectorXd& values, bool volumetric,
                  double regularization = 1e-8);
  double operator()(const Eigen::Vector3d& x) const;

 private:
  Eigen::Vector4d tail(const Eigen::Vector3d& x) const;

  std::vector<Eigen::Vector3d> sites_;
  Eigen::VectorXd coef_;
  bool volumetric_;
};

/// Thin-plate spline (r^2 log r) with a linear polynomial tail fitted to a
/// seeded uniform sample of valid voxels, evaluated at the holes.
GridBlock rbf_impute(const GridBlock& block, const MaskBlock& mask, ImputeScope scope, const RbfConfig& cfg);

}  // namespace stinpaint
