#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "stinpaint/common/kv_config.hpp"
#include "stinpaint/data/ugb_io.hpp"
#include "stinpaint/eval/eval.hpp"
#include "stinpaint/masking/masking.hpp"

namespace stinpaint {

ScenarioSpec ScenarioSpec::load(const std::string& path) {
  const KvConfig cfg = KvConfig::load(path);
  ScenarioSpec spec;
  spec.name = cfg.get_string("name", std::filesystem::path(path).stem().string());
  std::filesystem::path mask = cfg.require("mask");
  if (mask.is_relative()) mask = std::filesystem::path(path).parent_path() / mask;
  spec.mask_path = mask.string();
  spec.start_frame = static_cast<int>(cfg.require_int("start_frame"));
  spec.end_frame = static_cast<int>(cfg.require_int("end_frame"));
  if (spec.start_frame < 0 || spec.end_frame <= spec.start_frame)
    throw ParameterError("scenario period must satisfy 0 <= start_frame < end_frame");
  return spec;
}

void ScenarioResult::write_csv(std::ostream& out) const {
  out << "hour,gt_mean,pred_mean\n";
  out.precision(10);
  for (const auto& p : series) out << p.hour << ',' << p.gt_mean << ',' << p.pred_mean << '\n';
}

GridBlock impute_windows(const Imputer& imputer, const GridBlock& input, const MaskBlock& mask, int t,
                         int first_frame) {
  if (t < 1) throw ParameterError("temporal dimension must be >= 1");
  if (!input.same_shape(mask)) throw ShapeError("input and mask shapes differ");
  if (input.frames() < t) throw ParameterError("input has fewer frames than T");
  GridBlock out = input;
  for (int done = 0; done < input.frames();) {
    const int first = std::min(done, input.frames() - t);
    const GridBlock pred = imputer(input.slice(first, t), mask.slice(first, t), first_frame + first);
    if (pred.rows() != input.rows() || pred.cols() != input.cols() || pred.frames() != t)
      throw ShapeError("imputer returned a block of the wrong shape");
    for (int k = done - first; k < t; ++k) out.frame(first + k) = pred.frame(k);
    done = first + t;
  }
  return out;
}

ScenarioResult scenario_run(const Imputer& imputer, const GridSeries& series, const MaskBlock& mask2d, int start_frame,
                            int end_frame, int t) {
  if (t < 1) throw ParameterError("temporal dimension must be >= 1");
  if (start_frame < 0 || end_frame > series.frame_count() || end_frame <= start_frame)
    throw ParameterError("scenario period lies outside the series");
  const int frames = end_frame - start_frame;
  if (frames < t) throw ParameterError("scenario period is shorter than T");
  if (mask2d.rows() != series.frames.rows() || mask2d.cols() != series.frames.cols())
    throw ShapeError("scenario mask does not match the grid");
  const MaskBlock frame_mask = mask2d.slice(0, 1);
  const Eigen::Index holes_per_frame = count_holes(frame_mask);
  if (holes_per_frame == 0) throw UndefinedMetricError("scenario mask has no holes");

  const MaskBlock mask = replicate_mask(frame_mask, frames).mask;
  const GridBlock gt = series.frames.slice(start_frame, frames);
  const GridBlock pred = impute_windows(imputer, gt, mask, t, start_frame);

  ScenarioResult result;
  double abs_sum = 0.0;
  for (int k = 0; k < frames; ++k) {
    double gt_sum = 0.0, pred_sum = 0.0;
    for (int r = 0; r < gt.rows(); ++r)
      for (int c = 0; c < gt.cols(); ++c) {
        if (mask(k, r, c)) continue;
        gt_sum += gt(k, r, c);
        pred_sum += pred(k, r, c);
        abs_sum += std::abs(double(pred(k, r, c)) - double(gt(k, r, c)));
      }
    result.series.push_back({k, gt_sum / double(holes_per_frame), pred_sum / double(holes_per_frame)});
  }
  result.mean_abs_error = abs_sum / (double(holes_per_frame) * frames);
  return result;
}

ScenarioResult scenario_run(const Imputer& imputer, const GridSeries& series, const ScenarioSpec& spec, int t) {
  const MaskBlock m = read_mask(spec.mask_path);
  return scenario_run(imputer, series, m.slice(0, 1), spec.start_frame, spec.end_frame, t);
}

}  // namespace stinpaint
