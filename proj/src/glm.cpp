#include "fairboard/glm.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "fairboard/error.hpp"

namespace fairboard::stats {

namespace {

using quiet_policy = boost::math::policies::policy<boost::math::policies::underflow_error<boost::math::policies::ignore_error>,
                                                   boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
                                                   boost::math::policies::evaluation_error<boost::math::policies::ignore_error>,
                                                   boost::math::policies::domain_error<boost::math::policies::ignore_error>>;

constexpr std::size_t kBlockCells = 4096;

}  // namespace

double t_to_z(double t, double df) {
  if (std::isnan(t)) return kMissing;
  if (t == 0.0) return 0.0;
  const double sign = t > 0 ? 1.0 : -1.0;
  if (std::isinf(t)) return sign * kZClamp;
  const boost::math::students_t_distribution<double, quiet_policy> tdist(df);
  const double upper = boost::math::cdf(boost::math::complement(tdist, std::fabs(t)));
  if (!(upper > 0.0)) return sign * kZClamp;
  const boost::math::normal_distribution<double, quiet_policy> normal;
  const double z = boost::math::quantile(boost::math::complement(normal, upper));
  if (!std::isfinite(z)) return sign * kZClamp;
  return sign * std::min(z, kZClamp);
}

ZMap ZMap::on_grid(const Volume& geometry) {
  ZMap m;
  m.dims = geometry.dims;
  m.spacing = geometry.spacing;
  m.affine = geometry.affine;
  m.z.assign(geometry.size(), kMissing);
  m.mask.assign(geometry.size(), 0);
  return m;
}

std::size_t ZMap::mask_count() const {
  std::size_t n = 0;
  for (auto b : mask) n += b != 0;
  return n;
}

Volume ZMap::to_volume() const {
  Volume v = Volume::zeros(dims, spacing, Dtype::F32);
  v.affine = affine;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (mask[i]) v.data[i] = z[i];
  return v;
}

Volume ZMap::mask_volume() const {
  Volume v = Volume::zeros(dims, spacing, Dtype::U8);
  v.affine = affine;
  for (std::size_t i = 0; i < mask.size(); ++i) v.data[i] = mask[i] ? 1.0 : 0.0;
  return v;
}

ContrastOls::ContrastOls(const Eigen::MatrixXd& x, Eigen::Index contrast) : x_(x), contrast_(contrast) {
  if (contrast < 0 || contrast >= x.cols()) throw Error(ErrorCode::InvalidArgument, "contrast column out of range");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) throw Error(ErrorCode::RankDeficient, "GLM design is rank deficient");
  df_ = static_cast<double>(x.rows() - qr.rank());
  if (df_ < 1.0) throw Error(ErrorCode::RankDeficient, "GLM has no residual degrees of freedom");
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  pinv_ = xtx_inv * x.transpose();
  cvar_ = xtx_inv(contrast, contrast);
}

Eigen::VectorXd ContrastOls::t(const Eigen::MatrixXd& y) const {
  const Eigen::MatrixXd beta = pinv_ * y;
  const Eigen::MatrixXd resid = y - x_ * beta;
  const double contrast_scale = x_.col(contrast_).norm();
  Eigen::VectorXd out(y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double rss = resid.col(c).squaredNorm();
    const double ynorm2 = y.col(c).squaredNorm();
    const double b = beta(contrast_, c);
    if (rss <= 1e-24 * ynorm2 || ynorm2 == 0.0) {
      // Exact fit: the sign of the effect is all that survives.
      const bool null_effect = std::fabs(b) * contrast_scale <= 1e-10 * std::sqrt(ynorm2);
      out(c) = null_effect ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
      continue;
    }
    out(c) = b / std::sqrt(rss / df_ * cvar_);
  }
  return out;
}

std::vector<std::uint8_t> default_analysis_mask(std::span<const Volume> observations, const Volume* brain_mask) {
  if (observations.empty()) throw Error(ErrorCode::EmptyInput, "no observations");
  const std::size_t n = observations.front().size();
  std::vector<std::uint8_t> mask(n, 0);
  for (const auto& v : observations)
    for (std::size_t i = 0; i < n; ++i)
      if (v.data[i] != 0.0) mask[i] = 1;
  if (brain_mask) {
    if (!brain_mask->same_grid(observations.front())) throw Error(ErrorCode::GridMismatch, "brain mask grid differs");
    for (std::size_t i = 0; i < n; ++i)
      if (brain_mask->data[i] == 0.0) mask[i] = 0;
  }
  return mask;
}

ZMap mass_univariate_glm(const Eigen::MatrixXd& y, const std::vector<std::size_t>& cells, const Volume& geometry,
                         const DesignMatrix& design, const std::string& contrast) {
  if (y.rows() != design.x.rows()) throw Error(ErrorCode::InvalidArgument, "one observation per design row required");
  const ContrastOls ols(design.x, design.require_column(contrast));
  ZMap out = ZMap::on_grid(geometry);
  out.df = ols.df();
  const Eigen::VectorXd t = ols.t(y);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out.mask[cells[k]] = 1;
    out.z[cells[k]] = t_to_z(t(static_cast<Eigen::Index>(k)), out.df);
  }
  return out;
}

ZMap mass_univariate_glm(std::span<const Volume> observations, const DesignMatrix& design,
                         const std::string& contrast, const Volume* brain_mask) {
  if (observations.size() != static_cast<std::size_t>(design.x.rows()))
    throw Error(ErrorCode::InvalidArgument, "one observation per design row required");
  for (const auto& v : observations)
    if (!v.same_grid(observations.front())) throw Error(ErrorCode::GridMismatch, "observations on different grids");

  const ContrastOls ols(design.x, design.require_column(contrast));
  const auto mask = default_analysis_mask(observations, brain_mask);
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) cells.push_back(i);

  ZMap out = ZMap::on_grid(observations.front());
  out.df = ols.df();
  const auto n = static_cast<Eigen::Index>(observations.size());
  Eigen::MatrixXd block;
  for (std::size_t start = 0; start < cells.size(); start += kBlockCells) {
    const std::size_t len = std::min(kBlockCells, cells.size() - start);
    block.resize(n, static_cast<Eigen::Index>(len));
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& data = observations[static_cast<std::size_t>(r)].data;
      for (std::size_t k = 0; k < len; ++k) block(r, static_cast<Eigen::Index>(k)) = data[cells[start + k]];
    }
    const Eigen::VectorXd t = ols.t(block);
    for (std::size_t k = 0; k < len; ++k) {
      out.mask[cells[start + k]] = 1;
      out.z[cells[start + k]] = t_to_z(t(static_cast<Eigen::Index>(k)), out.df);
    }
  }
  return out;
}

}  // namespace fairboard::stats
