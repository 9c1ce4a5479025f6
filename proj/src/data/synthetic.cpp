#include "stinpaint/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace stinpaint {

void SyntheticCitySpec::validate() const {
  if (grid_h < 1 || grid_w < 1) throw ParameterError("synthetic grid must be at least 1x1");
  if (diurnal_amplitude < 0.0 || diurnal_amplitude > 1.0)
    throw ParameterError("diurnal_amplitude must lie in [0, 1]");
  for (const auto& h : hotspots) {
    if (h.peak_rate < 0.0) throw ParameterError("hotspot peak_rate must be >= 0");
    if (h.radius <= 0.0) throw ParameterError("hotspot radius must be > 0");
    if (h.center_row < 0 || h.center_row >= grid_h || h.center_col < 0 || h.center_col >= grid_w)
      throw ParameterError("hotspot center outside grid");
  }
  for (const auto& a : anomaly_days) {
    if (a.rate_multiplier < 0.0) throw ParameterError("anomaly rate_multiplier must be >= 0");
    if (a.day_index < 0) throw ParameterError("anomaly day_index must be >= 0");
    for (const auto& [r, c] : a.cells)
      if (r < 0 || r >= grid_h || c < 0 || c >= grid_w) throw ParameterError("anomaly cell outside grid");
  }
}

double SyntheticCitySpec::intensity(int day, int hour, int row, int col) const {
  double base = 0.0;
  for (const auto& h : hotspots) {
    const double dr = row - h.center_row;
    const double dc = col - h.center_col;
    base += h.peak_rate * std::exp(-(dr * dr + dc * dc) / (2.0 * h.radius * h.radius));
  }
  double rate = base * (1.0 + diurnal_amplitude * std::sin(2.0 * std::numbers::pi * hour / 24.0));
  for (const auto& a : anomaly_days) {
    if (a.day_index != day) continue;
    for (const auto& [r, c] : a.cells) {
      if (r == row && c == col) {
        rate *= a.rate_multiplier;
        break;
      }
    }
  }
  return rate;
}

GridSeries generate_synthetic(const SyntheticCitySpec& spec, int n_days) {
  spec.validate();
  if (n_days < 1) throw ParameterError("n_days must be >= 1");
  GridSeries out{GridBlock(n_days * 24, spec.grid_h, spec.grid_w), spec.start_time, 1};
  std::mt19937_64 rng(spec.noise_seed);
  for (int d = 0; d < n_days; ++d) {
    for (int h = 0; h < 24; ++h) {
      auto frame = out.frames.frame(d * 24 + h);
      for (int r = 0; r < spec.grid_h; ++r) {
        for (int c = 0; c < spec.grid_w; ++c) {
          const double rate = spec.intensity(d, h, r, c);
          if (rate <= 0.0) continue;  // no draw, keeps zero cells exactly zero
          std::poisson_distribution<int> draw(rate);
          frame(r, c) = static_cast<float>(draw(rng));
        }
      }
    }
  }
  return out;
}

SyntheticCitySpec SyntheticCitySpec::from_config(const KvConfig& cfg) {
  SyntheticCitySpec s;
  s.hotspots.clear();
  s.grid_h = static_cast<int>(cfg.get_int("grid_h", s.grid_h));
  s.grid_w = static_cast<int>(cfg.get_int("grid_w", s.grid_w));
  s.diurnal_amplitude = cfg.get_double("diurnal_amplitude", s.diurnal_amplitude);
  s.noise_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  if (auto st = cfg.get("start_time")) s.start_time = parse_wall_time(*st);
  for (const auto& line : cfg.get_all("hotspot")) {
    const auto f = split(line, ',');
    if (f.size() != 4) throw FormatError("hotspot expects row,col,radius,peak: " + line);
    s.hotspots.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  }
  for (const auto& line : cfg.get_all("anomaly")) {
    const auto f = split(line, ',');
    if (f.size() != 6) throw FormatError("anomaly expects day,multiplier,row0,col0,row1,col1: " + line);
    AnomalyDay a;
    a.day_index = static_cast<int>(parse_int(f[0]));
    a.rate_multiplier = parse_double(f[1]);
    const int r0 = static_cast<int>(parse_int(f[2])), c0 = static_cast<int>(parse_int(f[3]));
    const int r1 = static_cast<int>(parse_int(f[4])), c1 = static_cast<int>(parse_int(f[5]));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) a.cells.emplace_back(r, c);
    s.anomaly_days.push_back(std::move(a));
  }
  s.validate();
  return s;
}

KvConfig SyntheticCitySpec::to_config() const {
  KvConfig cfg;
  cfg.add("grid_h", std::to_string(grid_h));
  cfg.add("grid_w", std::to_string(grid_w));
  std::ostringstream amp;
  amp.precision(17);
  amp << diurnal_amplitude;
  cfg.add("diurnal_amplitude", amp.str());
  cfg.add("seed", std::to_string(noise_seed));
  cfg.add("start_time", format_wall_time(start_time));
  for (const auto& h : hotspots) {
    std::ostringstream ss;
    ss.precision(17);
    ss << h.center_row << ',' << h.center_col << ',' << h.radius << ',' << h.peak_rate;
    cfg.add("hotspot", ss.str());
  }
  // Anomaly cell sets are written one cell per rectangle.
  for (const auto& a : anomaly_days) {
    for (const auto& [r, c] : a.cells) {
      std::ostringstream ss;
      ss.precision(17);
      ss << a.day_index << ',' << a.rate_multiplier << ',' << r << ',' << c << ',' << r << ',' << c;
      cfg.add("anomaly", ss.str());
    }
  }
  return cfg;
}

SyntheticCitySpec SyntheticCitySpec::default_city() {
  SyntheticCitySpec s;
  s.hotspots = {
      {16.0, 20.0, 3.0, 24.0},  // dense core
      {22.0, 30.0, 5.0, 8.0},   // midtown spread
      {44.0, 46.0, 2.0, 10.0},  // transit hub
      {52.0, 14.0, 4.0, 2.0},   // sparse outer district
  };
  s.diurnal_amplitude = 0.6;
  return s;
}

}  // namespace stinpaint
