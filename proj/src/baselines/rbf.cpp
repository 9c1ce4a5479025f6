#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stinpaint/baselines/baselines.hpp"

namespace stinpaint {
namespace {

double thin_plate(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }  // r^2 log r

// Fits and evaluates one scope (a frame in 2D mode, the block in 3D mode).
void impute_scope(const GridBlock& block, const MaskBlock& mask, int t_lo, int t_hi, bool volumetric,
                  const RbfConfig& cfg, std::mt19937_64& rng, GridBlock& out) {
  std::vector<Eigen::Vector3i> valid, holes;
  for (int t = t_lo; t < t_hi; ++t)
    for (int r = 0; r < block.rows(); ++r)
      for (int c = 0; c < block.cols(); ++c) (mask(t, r, c) ? valid : holes).emplace_back(t, r, c);
  if (holes.empty()) return;
  if (static_cast<int>(valid.size()) < (volumetric ? 5 : 4))
    throw ImputerError("RBF imputation: not enough valid voxels to fit the linear tail");

  std::vector<Eigen::Vector3i> picked;
  std::sample(valid.begin(), valid.end(), std::back_inserter(picked), static_cast<std::size_t>(cfg.sample_count), rng);
  std::vector<Eigen::Vector3d> sites;
  Eigen::VectorXd values(static_cast<Eigen::Index>(picked.size()));
  for (std::size_t i = 0; i < picked.size(); ++i) {
    sites.push_back(picked[i].cast<double>());
    values[Eigen::Index(i)] = block(picked[i][0], picked[i][1], picked[i][2]);
  }
  const ThinPlateSpline spline(std::move(sites), values, volumetric, cfg.regularization);
  for (const auto& h : holes) out(h[0], h[1], h[2]) = static_cast<float>(spline(h.cast<double>()));
}

}  // namespace

ThinPlateSpline::ThinPlateSpline(std::vector<Eigen::Vector3d> sites, const Eigen::VectorXd& values, bool volumetric,
                                 double regularization)
    : sites_(std::move(sites)), volumetric_(volumetric) {
  const int n = static_cast<int>(sites_.size());
  const int poly = volumetric ? 4 : 3;
  if (values.size() != n) throw ShapeError("thin-plate spline: one value per site required");
  if (n < poly + 1) throw ImputerError("thin-plate spline: too few sites for the linear tail");
  if (!volumetric)
    for (auto& s : sites_) s[0] = 0.0;

  const int m = n + poly;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = thin_plate((sites_[i] - sites_[j]).squaredNorm());
    a(i, i) += regularization;
    const Eigen::Vector4d p = tail(sites_[i]);
    a.block(i, n, 1, poly) = p.head(poly).transpose();
    a.block(n, i, poly, 1) = p.head(poly);
  }
  rhs.head(n) = values;
  // The kernel is conditionally positive definite, so the system is regular
  // exactly when the sites determine the linear tail.
  const Eigen::MatrixXd tail_block = a.block(0, n, n, poly);
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(tail_block).rank() < poly)
    throw ImputerError("thin-plate spline: sites do not determine the linear tail (collinear or coplanar)");
  coef_ = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(rhs);
  if (!coef_.allFinite() || (a * coef_ - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
    throw ImputerError("thin-plate spline: interpolation system could not be solved accurately");
}

Eigen::Vector4d ThinPlateSpline::tail(const Eigen::Vector3d& x) const {
  Eigen::Vector4d p;
  if (volumetric_)
    p << 1.0, x[0], x[1], x[2];
  else
    p << 1.0, x[1], x[2], 0.0;
  return p;
}

double ThinPlateSpline::operator()(const Eigen::Vector3d& x_in) const {
  Eigen::Vector3d x = x_in;
  if (!volumetric_) x[0] = 0.0;
  const int n = static_cast<int>(sites_.size());
  const int poly = volumetric_ ? 4 : 3;
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += coef_[i] * thin_plate((x - sites_[i]).squaredNorm());
  return v + coef_.tail(poly).dot(tail(x).head(poly));
}

GridBlock rbf_impute(const GridBlock& block, const MaskBlock& mask, ImputeScope scope, const RbfConfig& cfg) {
  if (!block.same_shape(mask)) throw ShapeError("rbf_impute: block and mask shapes differ");
  const bool volumetric = scope == ImputeScope::k3D;
  if (cfg.sample_count < (volumetric ? 5 : 4))
    throw ParameterError("RBF sample_count must exceed the polynomial degrees of freedom");
  std::mt19937_64 rng(cfg.seed);
  GridBlock out = block;
  if (volumetric) {
    impute_scope(block, mask, 0, block.frames(), true, cfg, rng, out);
  } else {
    for (int t = 0; t < block.frames(); ++t) impute_scope(block, mask, t, t + 1, false, cfg, rng, out);
  }
  return out;
}

}  // namespace stinpaint
