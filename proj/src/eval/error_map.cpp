#include "stinpaint/eval/eval.hpp"

namespace stinpaint {

ErrorMap spatial_error_map(const std::vector<GridBlock>& preds, const std::vector<GridBlock>& gts,
                           const std::vector<MaskBlock>& masks) {
  if (preds.size() != gts.size() || preds.size() != masks.size())
    throw ShapeError("error map sequences differ in length");
  if (preds.empty()) throw ParameterError("error map needs at least one block");
  const int h = preds[0].rows(), w = preds[0].cols();
  ErrorMap map;
  map.value = Eigen::MatrixXd::Zero(h, w);
  map.count = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(h, w);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto &p = preds[i], &g = gts[i];
    const auto& m = masks[i];
    if (!p.same_shape(g) || !p.same_shape(m) || p.rows() != h || p.cols() != w)
      throw ShapeError("error map blocks are not aligned");
    for (int t = 0; t < p.frames(); ++t)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          if (m(t, r, c)) continue;
          map.value(r, c) += double(p(t, r, c)) - double(g(t, r, c));
          ++map.count(r, c);
        }
  }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (map.count(r, c) > 0) map.value(r, c) /= double(map.count(r, c));
  return map;
}

GridBlock ErrorMap::as_block() const {
  GridBlock out(1, int(value.rows()), int(value.cols()));
  for (int r = 0; r < value.rows(); ++r)
    for (int c = 0; c < value.cols(); ++c) out(0, r, c) = static_cast<float>(value(r, c));
  return out;
}

}  // namespace stinpaint
