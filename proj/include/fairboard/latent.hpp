#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "fairboard/features.hpp"
#include "fairboard/glm.hpp"
#include "fairboard/volume.hpp"

namespace fairboard::repr {

inline constexpr int kLatentGrid = 300;
inline constexpr double kSpikeFwhm = 18.0;
inline constexpr double kMargin = 0.05;

struct LatentRaster {
  int grid = kLatentGrid;
  double spike_fwhm = kSpikeFwhm;
  // Patient positions in grid units (x = column, y = row), not rounded.
  Eigen::MatrixXd points;
  // grid * grid cells, row-major (cell = y * grid + x).
  std::vector<std::uint8_t> coverage;

  std::size_t cells() const { return static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid); }
  // Nearest cell of patient i.
  std::size_t cell_of(Eigen::Index i) const;
  // Unit-mass Gaussian image of patient i over the whole grid.
  std::vector<double> spike(Eigen::Index i) const;
  // n x cells.size() matrix of spike values at the given cells.
  Eigen::MatrixXd spike_matrix(const std::vector<std::size_t>& cells) const;
  // 2-D geometry (grid x grid x 1) for z-map export.
  Volume geometry() const;
};

// Isotropic affine map of the coordinates into the grid, leaving a 5% margin
// on each side; coverage marks cells within fwhm/2 of a patient.
LatentRaster rasterize_latent(const Eigen::MatrixXd& coords, int grid = kLatentGrid, double spike_fwhm = kSpikeFwhm);

struct LatentCluster {
  int id;
  int sign;
  std::vector<std::size_t> cells;
  // Patients whose nearest cell lies in the cluster.
  std::vector<Eigen::Index> members;
  double peak_z;
};

struct LatentGlmResult {
  stats::ZMap zmap;
  std::vector<std::uint8_t> fdr_mask;
  // Cluster id per cell (0 outside clusters).
  std::vector<int> labels;
  std::vector<LatentCluster> clusters;
  double alpha = 0.05;
};

// Spike images regressed on [Intercept, Perf] over the covered cells, BH-FDR
// over those cells, and 4-connected same-sign clusters of significant cells.
// Throws ZeroVariance for constant perf.
LatentGlmResult latent_glm(const LatentRaster& raster, std::span<const double> perf, double alpha = 0.05);

struct EffectEntry {
  std::string feature;
  double d;
  // Both groups constant at different values: d is missing but the groups
  // are completely separated on this feature.
  bool separated;
  bool demographic;
};

struct EffectProfile {
  std::vector<EffectEntry> entries;
  // Non-empty when the profile could not be computed.
  std::string note;

  // Largest-magnitude effect among demographic features (separated first);
  // nullptr when none is available.
  const EffectEntry* strongest_demographic() const;
};

// Cohen's d of members versus non-members for every demographic feature and
// every lesion component, on the unstandardized values.
EffectProfile cluster_effect_profile(const std::vector<bool>& members, const FeatureMatrix& features);

// Voxel-wise count of member lesions. Throws GridMismatch.
Volume significant_overlap_map(const std::vector<bool>& members, std::span<const Volume> masks);

}  // namespace fairboard::repr
