#include "stinpaint/baselines/baselines.hpp"
#include "stinpaint/data/ugb_io.hpp"

namespace stinpaint {

MeanTable fit_global_mean(const GridSeries& train) {
  const GridBlock& f = train.frames;
  if (f.empty()) throw ParameterError("global mean: empty training series");
  if (std::int64_t(f.frames()) * train.bin_hours < 24)
    throw ParameterError("global mean: training series must cover at least one full day");
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(24, f.frame_size());
  MeanTable table;
  for (int k = 0; k < f.frames(); ++k) {
    const int hour = hour_of_day(train.frame_time(k));
    sums.row(hour) += Eigen::Map<const Eigen::VectorXf>(f.data() + k * f.frame_size(), f.frame_size()).cast<double>().transpose();
    ++table.counts[hour];
  }
  table.means = GridBlock(24, f.rows(), f.cols());
  for (int h = 0; h < 24; ++h) {
    if (table.counts[h] == 0) continue;
    Eigen::Map<Eigen::VectorXf>(table.means.data() + h * f.frame_size(), f.frame_size()) =
        (sums.row(h).transpose() / double(table.counts[h])).cast<float>();
  }
  return table;
}

GridBlock impute_global_mean(const MeanTable& table, const GridBlock& block, const MaskBlock& mask, int first_hour,
                             int bin_hours) {
  if (!block.same_shape(mask)) throw ShapeError("global mean: block and mask shapes differ");
  if (block.rows() != table.means.rows() || block.cols() != table.means.cols())
    throw ShapeError("global mean: grid does not match the table");
  if (first_hour < 0 || first_hour > 23) throw ParameterError("hour_of_day must lie in 0..23");
  GridBlock out = block;
  for (int t = 0; t < block.frames(); ++t) {
    const int hour = (first_hour + t * bin_hours) % 24;
    for (int r = 0; r < block.rows(); ++r)
      for (int c = 0; c < block.cols(); ++c)
        if (!mask(t, r, c)) out(t, r, c) = table.means(hour, r, c);
  }
  return out;
}

GridBlock predict_global_mean(const MeanTable& table, const GridBlock& frame, const MaskBlock& mask, int hour_of_day) {
  return impute_global_mean(table, frame, mask, hour_of_day, 1);
}

void write_mean_table(const std::string& path, const MeanTable& table) { write_grid(path, table.means); }

MeanTable read_mean_table(const std::string& path) {
  MeanTable t;
  t.means = read_grid(path);
  if (t.means.frames() != 24) throw FormatError("mean table must have 24 frames: " + path);
  return t;
}

}  // namespace stinpaint
