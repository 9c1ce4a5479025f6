#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stinpaint/common/kv_config.hpp"
#include "stinpaint/data/grid.hpp"

namespace stinpaint {

struct Hotspot {
  double center_row = 0.0;
  double center_col = 0.0;
  double radius = 1.0;
  double peak_rate = 0.0;
};

struct AnomalyDay {
  int day_index = 0;
  std::vector<std::pair<int, int>> cells;  // (row, col)
  double rate_multiplier = 1.0;
};

/// Desk-scale stand-in for a skewed city: a few Gaussian hotspots on an
/// otherwise empty grid, modulated by a diurnal sine and optional anomalies.
struct SyntheticCitySpec {
  int grid_h = 64;
  int grid_w = 64;
  std::vector<Hotspot> hotspots;
  double diurnal_amplitude = 0.5;
  std::uint64_t noise_seed = 0;
  std::vector<AnomalyDay> anomaly_days;
  WallTime start_time = parse_wall_time("2016-01-01T00:00:00");

  void validate() const;

  /// Poisson rate for one cell during hour `hour` of day `day`.
  double intensity(int day, int hour, int row, int col) const;

  /// Reads `grid_h`, `grid_w`, `diurnal_amplitude`, `seed`, `start_time`,
  /// repeated `hotspot=row,col,radius,peak` and
  /// `anomaly=day,multiplier,row0,col0,row1,col1` (inclusive rectangle).
  static SyntheticCitySpec from_config(const KvConfig& cfg);
  KvConfig to_config() const;

  /// Four hotspots of very different density on a 64x64 grid.
  static SyntheticCitySpec default_city();
};

/// Draws Poisson counts for n_days * 24 hourly frames. Pure in (spec, n_days).
GridSeries generate_synthetic(const SyntheticCitySpec& spec, int n_days);

}  // namespace stinpaint
