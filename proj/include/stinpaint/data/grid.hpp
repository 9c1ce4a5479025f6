#pragma once

#include <chrono>
#include <iosfwd>
#include <string>
#include <vector>

#include "stinpaint/common/kv_config.hpp"
#include "stinpaint/data/volume.hpp"

namespace stinpaint {

/// Naive local wall-clock time; seconds since 1970-01-01T00:00:00 with no zone.
using WallTime = std::chrono::sys_seconds;

WallTime parse_wall_time(const std::string& iso);  // YYYY-MM-DDTHH:MM[:SS]
std::string format_wall_time(WallTime t);
int hour_of_day(WallTime t);

struct RegionSpec {
  double lon_min = 0.0;
  double lon_max = 1.0;
  double lat_min = 0.0;
  double lat_max = 1.0;
  int grid_w = 64;
  int grid_h = 64;
  int bin_hours = 1;

  void validate() const;
  /// Keys: lon_min, lon_max, lat_min, lat_max, grid_w, grid_h, bin_hours.
  static RegionSpec from_config(const KvConfig& cfg);
};

struct EventRecord {
  WallTime timestamp;
  double lon = 0.0;
  double lat = 0.0;
};

/// Consecutive frames sharing one spatial grid. Frame k covers
/// [start + k * bin_hours, start + (k + 1) * bin_hours).
struct GridSeries {
  GridBlock frames;
  WallTime start_time{};
  int bin_hours = 1;

  int frame_count() const { return frames.frames(); }
  WallTime frame_time(int k) const { return start_time + std::chrono::hours(k * bin_hours); }
};

struct ParsedEvents {
  std::vector<EventRecord> records;
  std::size_t skipped = 0;
};

/// Reads `timestamp,lon,lat` CSV. Malformed rows are skipped and tallied; a
/// missing or wrong header throws IngestError.
ParsedEvents parse_events(std::istream& in);

struct RasterStats {
  std::size_t accepted = 0;
  std::size_t outside_region = 0;
  std::size_t outside_window = 0;
};

/// Counts events per cell and frame. Row 0 is the northernmost band; cells are
/// half-open so events on lon_max / lat_min fall outside the grid.
GridSeries rasterize(const std::vector<EventRecord>& events, const RegionSpec& region, WallTime start,
                     int n_frames, RasterStats* stats = nullptr);

/// Non-overlapping windows of `t` frames; a trailing partial window is dropped.
std::vector<GridBlock> chunk_series(const GridSeries& series, int t);
std::vector<GridBlock> chunk_frames(const GridBlock& frames, int t);

}  // namespace stinpaint
