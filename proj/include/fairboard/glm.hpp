#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairboard/design.hpp"
#include "fairboard/volume.hpp"

namespace fairboard::stats {

// |z| is clamped here; the Student-t tail underflows in double precision
// well before this point.
inline constexpr double kZClamp = 40.0;

// z = Phi^-1(T_df(t)), computed from the upper tail for accuracy, clamped to
// +-kZClamp. Monotone and sign-preserving.
double t_to_z(double t, double df);

// Per-cell statistic map over an analysis grid. z is NaN off the mask.
struct ZMap {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Affine affine = diagonal_affine({1.0, 1.0, 1.0});
  std::vector<double> z;
  std::vector<std::uint8_t> mask;
  double df = 0.0;

  static ZMap on_grid(const Volume& geometry);
  std::size_t size() const { return z.size(); }
  bool same_grid(const ZMap& o) const { return dims == o.dims && spacing == o.spacing; }
  std::size_t mask_count() const;
  // f32 volume with 0 off the mask.
  Volume to_volume() const;
  Volume mask_volume() const;
};

// Ordinary least squares of every column of y (n x cells) on x (n x p), with
// the t statistic of one contrast column. df = n - p; throws RankDeficient.
class ContrastOls {
 public:
  ContrastOls(const Eigen::MatrixXd& x, Eigen::Index contrast);

  double df() const { return df_; }
  // t for each column of y; +-inf for an exact fit with a nonzero effect.
  Eigen::VectorXd t(const Eigen::MatrixXd& y) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::MatrixXd pinv_;
  Eigen::Index contrast_;
  double cvar_;
  double df_;
};

// Cells carrying any nonzero observation, intersected with brain_mask when given.
std::vector<std::uint8_t> default_analysis_mask(std::span<const Volume> observations, const Volume* brain_mask);

// Voxel-wise GLM: observations[i] belongs to design row i. The contrast is a
// design column name. Cells are processed in blocks so memory stays bounded.
ZMap mass_univariate_glm(std::span<const Volume> observations, const DesignMatrix& design,
                         const std::string& contrast, const Volume* brain_mask = nullptr);

// Same, over an explicit cell mask and a precomputed n x cells matrix.
ZMap mass_univariate_glm(const Eigen::MatrixXd& y, const std::vector<std::size_t>& cells, const Volume& geometry,
                         const DesignMatrix& design, const std::string& contrast);

}  // namespace fairboard::stats
