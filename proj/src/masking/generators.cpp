#include <algorithm>
#include <limits>

#include "stinpaint/data/ugb_io.hpp"
#include "stinpaint/masking/masking.hpp"

namespace stinpaint {

void MaskGenConfig::validate() const {
  if (walk_steps < 0) throw ParameterError("walk_steps must be >= 0");
  if (brush_radius < 0) throw ParameterError("brush_radius must be >= 0");
  if (!(blur_sigma > 0.0)) throw ParameterError("blur_sigma must be > 0");
  if (!(threshold_percentile > 0.0 && threshold_percentile < 100.0))
    throw ParameterError("threshold_percentile must lie in (0, 100)");
}

MaskGenConfig MaskGenConfig::from_config(const KvConfig& cfg) {
  MaskGenConfig m;
  m.walk_steps = static_cast<int>(cfg.get_int("walk_steps", m.walk_steps));
  m.brush_radius = static_cast<int>(cfg.get_int("brush_radius", m.brush_radius));
  m.blur_sigma = cfg.get_double("blur_sigma", m.blur_sigma);
  m.threshold_percentile = cfg.get_double("threshold_percentile", m.threshold_percentile);
  m.per_frame_independent = cfg.get_bool("per_frame_independent", m.per_frame_independent);
  m.validate();
  return m;
}

KvConfig MaskGenConfig::to_config() const {
  KvConfig cfg;
  cfg.add("walk_steps", std::to_string(walk_steps));
  cfg.add("brush_radius", std::to_string(brush_radius));
  cfg.add("blur_sigma", format_double(blur_sigma));
  cfg.add("threshold_percentile", format_double(threshold_percentile));
  cfg.add("per_frame_independent", per_frame_independent ? "true" : "false");
  return cfg;
}

MaskRng indexed_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
  return MaskRng(seq);
}

namespace {

void paint(HoleMap& holes, int r, int c, int radius) {
  const int rows = static_cast<int>(holes.rows());
  const int cols = static_cast<int>(holes.cols());
  const int r0 = std::max(0, r - radius), r1 = std::min(rows - 1, r + radius);
  const int c0 = std::max(0, c - radius), c1 = std::min(cols - 1, c + radius);
  holes.block(r0, c0, r1 - r0 + 1, c1 - c0 + 1).setConstant(1);
}

int uniform_index(int n, MaskRng& rng) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

// Keeps at least one observed cell per frame: if the walk covered everything,
// the cell diagonally opposite the start is restored.
void keep_one_valid(HoleMap& holes, int start_row, int start_col) {
  if ((holes == 0).any()) return;
  holes(holes.rows() - 1 - start_row, holes.cols() - 1 - start_col) = 0;
}

void write_frame(MaskBlock& mask, int t, const HoleMap& holes) {
  auto f = mask.frame(t);
  f = (1 - holes).matrix();
}

HoleMap walk_from(int rows, int cols, int start, const MaskGenConfig& cfg, MaskRng& rng) {
  const int r = start / cols, c = start % cols;
  HoleMap holes = random_walk_mask(rows, cols, r, c, cfg, rng);
  keep_one_valid(holes, r, c);
  return holes;
}

FrameD to_frame(const GridBlock& block, int t) { return block.frame(t).cast<double>(); }

}  // namespace

HoleMap random_walk_mask(int rows, int cols, int start_row, int start_col, const MaskGenConfig& cfg, MaskRng& rng) {
  if (start_row < 0 || start_row >= rows || start_col < 0 || start_col >= cols)
    throw ParameterError("random walk start outside grid");
  HoleMap holes = HoleMap::Zero(rows, cols);
  int r = start_row, c = start_col;
  paint(holes, r, c, cfg.brush_radius);
  std::uniform_int_distribution<int> direction(0, 3);
  for (int s = 0; s < cfg.walk_steps; ++s) {
    switch (direction(rng)) {
      case 0: r = std::max(0, r - 1); break;
      case 1: r = std::min(rows - 1, r + 1); break;
      case 2: c = std::max(0, c - 1); break;
      default: c = std::min(cols - 1, c + 1); break;
    }
    paint(holes, r, c, cfg.brush_radius);
  }
  return holes;
}

MaskBlock random_mask_block(int frames, int rows, int cols, const MaskGenConfig& cfg, MaskRng& rng) {
  cfg.validate();
  MaskBlock mask(frames, rows, cols, 1);
  const int generated = cfg.per_frame_independent ? frames : 1;
  for (int t = 0; t < generated; ++t) {
    const int start = uniform_index(rows * cols, rng);
    write_frame(mask, t, walk_from(rows, cols, start, cfg, rng));
  }
  for (int t = generated; t < frames; ++t) mask.frame(t) = mask.frame(0);
  return mask;
}

int biased_start_cell(const FrameD& frame, const MaskGenConfig& cfg, MaskRng& rng) {
  const auto regions = threshold_regions(gaussian_blur(frame, cfg.blur_sigma), cfg.threshold_percentile);
  if (regions.empty()) return -1;
  std::size_t total = 0;
  for (const auto& reg : regions) total += reg.cells.size();
  // One uniform draw over the concatenated candidate cells selects a region
  // with probability proportional to its size and a uniform cell inside it.
  auto pick = static_cast<std::size_t>(uniform_index(static_cast<int>(total), rng));
  for (const auto& reg : regions) {
    if (pick < reg.cells.size()) return reg.cells[pick];
    pick -= reg.cells.size();
  }
  return regions.back().cells.back();
}

MaskBlock biased_mask_block(const GridBlock& block, const MaskGenConfig& cfg, MaskRng& rng) {
  cfg.validate();
  const int rows = block.rows(), cols = block.cols();
  MaskBlock mask(block.frames(), rows, cols, 1);
  const int generated = cfg.per_frame_independent ? block.frames() : 1;
  for (int t = 0; t < generated; ++t) {
    FrameD reference;
    if (cfg.per_frame_independent) {
      reference = to_frame(block, t);
    } else {
      reference = FrameD::Zero(rows, cols);
      for (int k = 0; k < block.frames(); ++k) reference += to_frame(block, k);
      reference /= block.frames();
    }
    int start = biased_start_cell(reference, cfg, rng);
    if (start < 0) start = uniform_index(rows * cols, rng);
    write_frame(mask, t, walk_from(rows, cols, start, cfg, rng));
  }
  for (int t = generated; t < block.frames(); ++t) mask.frame(t) = mask.frame(0);
  return mask;
}

ScenarioMask replicate_mask(const MaskBlock& mask2d, int frames) {
  if (mask2d.frames() != 1) throw FormatError("scenario mask must have exactly one frame");
  if (frames < 1) throw ParameterError("scenario mask: frames must be >= 1");
  ScenarioMask out{MaskBlock(frames, mask2d.rows(), mask2d.cols()), 0.0};
  for (int t = 0; t < frames; ++t) out.mask.frame(t) = mask2d.frame(0);
  const auto holes = count_holes(mask2d);
  const auto valid = mask2d.size() - holes;
  out.hole_ratio = valid == 0 ? std::numeric_limits<double>::infinity() : double(holes) / double(valid);
  return out;
}

ScenarioMask load_scenario_mask(const std::string& path, int frames) { return replicate_mask(read_mask(path), frames); }

}  // namespace stinpaint
