#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fairboard/cohort.hpp"
#include "fairboard/error.hpp"
#include "fairboard/glm.hpp"
#include "fairboard/volume.hpp"

namespace fairboard::spatial {

// Random-effects pooling of k unit-variance z statistics at one voxel.
struct DlVoxel {
  double z;
  double tau2;
  double q;
  // Percent, 0..100.
  double i2;
};
DlVoxel dl_pool(std::span<const double> z);

struct MetaResult {
  stats::ZMap pooled_z;
  std::vector<double> tau2;
  std::vector<double> q;
  std::vector<double> i2;
  std::vector<std::uint8_t> fdr_mask;
  std::vector<int> k;
  double alpha = 0.05;
  double fdr_threshold = kMissing;

  Volume tau2_volume() const;
  Volume i2_volume() const;
  Volume fdr_volume() const;
};

// Pools per-voxel z over the maps carrying that voxel; voxels with fewer than
// two contributing maps are left out. BH-FDR over the pooled voxels.
// Throws TooFewStudies and GridMismatch.
MetaResult dersimonian_laird(std::span<const stats::ZMap> maps, double alpha = 0.05);

struct PermutationResult {
  double observed_max = 0.0;
  double null_p95 = 0.0;
  double fwe_p = 1.0;
  int n_perm = 0;
  std::vector<double> null_max;
};

// Whole-map sign flips; permutation j draws its flips from derive_seed(seed, j).
// The max |z| runs over every pooled voxel, thresholded or not.
PermutationResult sign_flip_permutation(std::span<const stats::ZMap> maps, int n_perm, std::uint64_t seed);

// (positive - negative) / k per voxel, where each map is BH-thresholded at alpha
// on its own. 0 outside every map's mask.
Volume prevalence_map(std::span<const stats::ZMap> maps, double alpha = 0.05);

struct HeterogeneitySummary {
  std::size_t n_voxels = 0;
  // I^2 as a fraction in [0, 1].
  double median_all = 0.0;
  double fraction_nonzero = 0.0;
  double median_nonzero = kMissing;
  double q1_nonzero = kMissing;
  double q3_nonzero = kMissing;
};
HeterogeneitySummary heterogeneity_summary(const MetaResult& meta);

// Design: Intercept, Perf, Age, Sex[M], Diagnosis[Non-GBM], Resection[STR],
// Resection[Biopsy], Source[UPENN-GBM], Survival; contrast on Perf.
// images[i], perf[i] and patients[i] describe the same patient. Rows with
// missing perf or covariates are dropped; perf is z-scored over the rest.
stats::ZMap per_model_spatial_glm(std::span<const Volume> images, std::span<const double> perf,
                                  const std::vector<CohortRow>& patients, const Volume* brain_mask = nullptr);

}  // namespace fairboard::spatial
