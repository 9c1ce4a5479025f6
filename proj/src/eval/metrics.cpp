#include <cmath>
#include <limits>
#include <ostream>

#include "stinpaint/eval/eval.hpp"

namespace stinpaint {
namespace {

void check_aligned(const GridBlock& pred, const GridBlock& gt) {
  if (!pred.same_shape(gt)) throw ShapeError("prediction and ground truth shapes differ");
}

template <typename Fn>
double hole_mean(const GridBlock& pred, const GridBlock& gt, const MaskBlock& mask, Fn fn) {
  check_aligned(pred, gt);
  if (!pred.same_shape(mask)) throw ShapeError("mask shape differs from the prediction");
  double sum = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (mask.values()[i]) continue;
    sum += fn(double(pred.values()[i]) - double(gt.values()[i]));
    ++n;
  }
  if (n == 0) throw UndefinedMetricError("hole metric undefined: mask has no holes");
  return sum / double(n);
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

Eigen::VectorXd ssim_kernel() {
  Eigen::VectorXd k(kWindow);
  const int half = kWindow / 2;
  for (int i = 0; i < kWindow; ++i) k[i] = std::exp(-double((i - half) * (i - half)) / (2.0 * kSigma * kSigma));
  return k / k.sum();
}

// Separable "valid" filtering: output is (rows - 10) x (cols - 10).
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& x, const Eigen::VectorXd& k) {
  const Eigen::Index oh = x.rows() - kWindow + 1, ow = x.cols() - kWindow + 1;
  Eigen::MatrixXd tmp(x.rows(), ow);
  for (Eigen::Index c = 0; c < ow; ++c) tmp.col(c) = x.middleCols(c, kWindow) * k;
  Eigen::MatrixXd out(oh, ow);
  for (Eigen::Index r = 0; r < oh; ++r) out.row(r) = k.transpose() * tmp.middleRows(r, kWindow);
  return out;
}

}  // namespace

double l1_hole(const GridBlock& pred, const GridBlock& gt, const MaskBlock& mask) {
  return hole_mean(pred, gt, mask, [](double d) { return std::abs(d); });
}

double l2_hole(const GridBlock& pred, const GridBlock& gt, const MaskBlock& mask) {
  return hole_mean(pred, gt, mask, [](double d) { return d * d; });
}

double ssim_frame(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                  double data_range) {
  if (!(data_range > 0.0)) throw ParameterError("SSIM data range must be > 0");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("SSIM frames differ in shape");
  if (a.rows() < kWindow || a.cols() < kWindow) throw ParameterError("SSIM needs frames of at least 11x11");
  const Eigen::VectorXd k = ssim_kernel();
  const Eigen::MatrixXd x = a, y = b;
  const Eigen::ArrayXXd mx = filter_valid(x, k).array();
  const Eigen::ArrayXXd my = filter_valid(y, k).array();
  const Eigen::ArrayXXd sxx = filter_valid(x.cwiseProduct(x), k).array() - mx * mx;
  const Eigen::ArrayXXd syy = filter_valid(y.cwiseProduct(y), k).array() - my * my;
  const Eigen::ArrayXXd sxy = filter_valid(x.cwiseProduct(y), k).array() - mx * my;
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const Eigen::ArrayXXd map =
      ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

double ssim(const GridBlock& pred, const GridBlock& gt, double data_range) {
  check_aligned(pred, gt);
  double total = 0.0;
  for (int t = 0; t < pred.frames(); ++t)
    total += ssim_frame(pred.frame(t).cast<double>(), gt.frame(t).cast<double>(), data_range);
  return total / pred.frames();
}

double psnr(const GridBlock& pred, const GridBlock& gt, double peak) {
  check_aligned(pred, gt);
  if (!(peak > 0.0)) throw ParameterError("PSNR peak must be > 0");
  double sse = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double d = double(pred.values()[i]) - double(gt.values()[i]);
    sse += d * d;
  }
  const double mse = sse / double(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

void MetricReport::write_csv(std::ostream& out) const {
  out << "block_index,l1_hole,l2_hole,ssim,psnr\n";
  out.precision(10);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    out << i << ',' << b.l1_hole << ',' << b.l2_hole << ',' << b.ssim << ',' << b.psnr << '\n';
  }
}

MetricReport evaluate_blocks(const std::vector<GridBlock>& preds, const std::vector<GridBlock>& gts,
                             const std::vector<MaskBlock>& masks, double data_range) {
  if (preds.size() != gts.size() || preds.size() != masks.size())
    throw ShapeError("evaluation sequences differ in length");
  if (preds.empty()) throw ParameterError("nothing to evaluate");
  MetricReport report;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    BlockMetrics m;
    m.l1_hole = l1_hole(preds[i], gts[i], masks[i]);
    m.l2_hole = l2_hole(preds[i], gts[i], masks[i]);
    m.ssim = ssim(preds[i], gts[i], data_range);
    m.psnr = psnr(preds[i], gts[i], data_range);
    report.blocks.push_back(m);
    report.mean.l1_hole += m.l1_hole;
    report.mean.l2_hole += m.l2_hole;
    report.mean.ssim += m.ssim;
    report.mean.psnr += m.psnr;
  }
  const double n = double(preds.size());
  report.mean.l1_hole /= n;
  report.mean.l2_hole /= n;
  report.mean.ssim /= n;
  report.mean.psnr /= n;
  return report;
}

double data_peak(const std::vector<GridBlock>& gts) {
  double peak = 0.0;
  for (const auto& g : gts)
    if (!g.empty()) peak = std::max(peak, double(g.values().maxCoeff()));
  return peak;
}

}  // namespace stinpaint
