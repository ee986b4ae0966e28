#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fairboard/cohort.hpp"
#include "fairboard/compartments.hpp"
#include "fairboard/volume.hpp"

namespace fairboard::repr {

inline constexpr int kPcaCap = 15;
inline constexpr double kPcaTarget = 0.80;
inline constexpr int kMaskGrid = 64;

// Nonzero entries of one flattened multi-channel image, sorted by index.
struct SparseImage {
  std::vector<std::size_t> index;
  std::vector<double> value;
};

// NET, ET and OED channels of a label volume resampled to 64^3, concatenated.
SparseImage lesion_channels(const CompartmentMasks& masks);

struct LesionPca {
  int k = 0;
  // Fraction of total variance per retained component.
  std::vector<double> explained;
  double cumulative = 0.0;
  // Fraction of total variance per component for every nonzero eigenvalue.
  std::vector<double> spectrum;
  // n x k principal component scores.
  Eigen::MatrixXd scores;
  // dimension x k unit loading vectors; empty unless requested.
  Eigen::MatrixXd loadings;
  Eigen::VectorXd mean;
};

// PCA through the n x n Gram matrix of the centred images, keeping the
// smallest K with cumulative explained variance >= target, capped at cap.
LesionPca lesion_pca(const std::vector<SparseImage>& images, std::size_t dimension, bool keep_loadings = false,
                     double target = kPcaTarget, int cap = kPcaCap);

// Names that may never enter the feature space.
const std::vector<std::string>& feature_deny_list();
// Throws InvalidArgument when a name contains a deny-listed token.
void audit_feature_names(const std::vector<std::string>& names);

struct FeatureMatrix {
  std::vector<std::string> patient_ids;
  std::vector<std::string> names;
  // Standardized columns (mean 0, population sd 1).
  Eigen::MatrixXd values;
  // Same columns before standardization.
  Eigen::MatrixXd raw;
  std::vector<bool> is_demographic;
  std::vector<std::string> dropped_constant;
  // Patients skipped for missing covariates.
  std::vector<std::string> excluded;
  LesionPca pca;
};

// Lesion PCs ("PC1".."PCk") then one-hot Sex, Grade, Resection, Diagnosis,
// Source, IDH and z-scored Age. Constant columns are dropped.
FeatureMatrix build_feature_matrix(const std::vector<std::string>& patient_ids,
                                   const std::vector<SparseImage>& images, std::size_t dimension,
                                   const std::vector<CohortRow>& cohort);

}  // namespace fairboard::repr
