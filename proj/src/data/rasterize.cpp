#include <cmath>

#include "stinpaint/data/grid.hpp"

namespace stinpaint {

void RegionSpec::validate() const {
  if (!(lon_min < lon_max) || !(lat_min < lat_max)) throw ParameterError("region bounds must satisfy min < max");
  if (grid_w < 1 || grid_h < 1) throw ParameterError("grid dimensions must be >= 1");
  if (bin_hours < 1) throw ParameterError("bin_hours must be >= 1");
}

RegionSpec RegionSpec::from_config(const KvConfig& cfg) {
  RegionSpec r;
  r.lon_min = cfg.require_double("lon_min");
  r.lon_max = cfg.require_double("lon_max");
  r.lat_min = cfg.require_double("lat_min");
  r.lat_max = cfg.require_double("lat_max");
  r.grid_w = static_cast<int>(cfg.get_int("grid_w", r.grid_w));
  r.grid_h = static_cast<int>(cfg.get_int("grid_h", r.grid_h));
  r.bin_hours = static_cast<int>(cfg.get_int("bin_hours", r.bin_hours));
  r.validate();
  return r;
}

GridSeries rasterize(const std::vector<EventRecord>& events, const RegionSpec& region, WallTime start,
                     int n_frames, RasterStats* stats) {
  region.validate();
  if (n_frames < 1) throw ParameterError("rasterize: n_frames must be >= 1");
  GridSeries series{GridBlock(n_frames, region.grid_h, region.grid_w), start, region.bin_hours};
  RasterStats local;
  const double dlon = (region.lon_max - region.lon_min) / region.grid_w;
  const double dlat = (region.lat_max - region.lat_min) / region.grid_h;
  const auto bin = std::chrono::seconds(std::chrono::hours(region.bin_hours)).count();

  for (const auto& e : events) {
    if (!(e.lon >= region.lon_min && e.lon < region.lon_max && e.lat > region.lat_min && e.lat <= region.lat_max)) {
      ++local.outside_region;
      continue;
    }
    const auto offset = (e.timestamp - start).count();
    // floor division; negative offsets land before the window
    const long long frame = offset >= 0 ? offset / bin : -((-offset + bin - 1) / bin);
    if (frame < 0 || frame >= n_frames) {
      ++local.outside_window;
      continue;
    }
    const int col = std::min(region.grid_w - 1, static_cast<int>(std::floor((e.lon - region.lon_min) / dlon)));
    const int row = std::min(region.grid_h - 1, static_cast<int>(std::floor((region.lat_max - e.lat) / dlat)));
    series.frames(static_cast<int>(frame), row, col) += 1.0f;
    ++local.accepted;
  }
  if (stats) *stats = local;
  return series;
}

std::vector<GridBlock> chunk_frames(const GridBlock& frames, int t) {
  if (t < 1) throw ParameterError("chunk: T must be >= 1");
  std::vector<GridBlock> blocks;
  if (frames.empty()) return blocks;
  const int n = frames.frames() / t;
  blocks.reserve(n);
  for (int k = 0; k < n; ++k) blocks.push_back(frames.slice(k * t, t));
  return blocks;
}

std::vector<GridBlock> chunk_series(const GridSeries& series, int t) { return chunk_frames(series.frames, t); }

}  // namespace stinpaint
