#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairboard/compartments.hpp"
#include "fairboard/embedding.hpp"
#include "fairboard/league.hpp"

namespace fairboard {

// Analysis configuration, read from JSON. Relative paths resolve against the
// directory holding the config file.
//
//   cohort_csv           cohort table
//   masks_dir            <masks_dir>/ground_truth/<patient>.nii[.gz] and
//                        <masks_dir>/<model_id>/<patient>.nii[.gz]
//   output_dir           every stage writes below this directory
//   label_map            optional path to a label map file
//   alpha                (0, 1), default 0.05
//   fwhm_mm              [0, 16], default 8
//   n_perm               >= 100, default 1000
//   bootstrap_iters      default 1000
//   seed                 default 42; FAIRBOARD_SEED overrides it
//   scenarios            [[wp, we], ...], default five weightings
//   embedding            {method: umap|pca, n_neighbors, min_dist, metric}
//   exclude_oedema_only  default true
//   invert_distance_inequality
//                        default false; hd95 and asd distributions enter the
//                        inequality indices as max - x instead of raw
//   two_class_models     model ids without a NET channel
//   univariate_outcomes, spatial_outcomes, representational_outcomes
//                        outcome names such as "WT_dice"
struct AnalysisConfig {
  std::filesystem::path base_dir = ".";
  std::filesystem::path cohort_csv = "cohort.csv";
  std::filesystem::path masks_dir = "masks";
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> label_map_path;
  double alpha = 0.05;
  double fwhm_mm = 8.0;
  int n_perm = 1000;
  int bootstrap_iters = 1000;
  std::uint64_t seed = 42;
  std::vector<league::Scenario> scenarios = league::kDefaultScenarios;
  repr::EmbedParams embedding;
  bool exclude_oedema_only = true;
  bool invert_distance_inequality = false;
  std::vector<std::string> two_class_models;
  std::vector<std::string> univariate_outcomes;
  std::vector<std::string> spatial_outcomes;
  std::vector<std::string> representational_outcomes;

  AnalysisConfig();

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path cohort_path() const { return resolve(cohort_csv); }
  std::filesystem::path masks_path() const { return resolve(masks_dir); }
  std::filesystem::path output_path() const { return resolve(output_dir); }
  LabelMap label_map() const;

  // Throws InvalidArgument on out-of-range values.
  void validate() const;
  // Every parameter except the filesystem locations, as canonical JSON.
  std::string parameters_json() const;
};

AnalysisConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
AnalysisConfig load_config(const std::filesystem::path& path);
// Applies FAIRBOARD_SEED when set.
void apply_environment(AnalysisConfig& config);

}  // namespace fairboard
