#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fairboard/config.hpp"

namespace fairboard {

// Output layout below config.output_path():
//   metrics.csv, exclusions.csv                      evaluate
//   univariate_gaps.csv, univariate_age_bins.csv     univariate
//   inequality.csv                                   inequality
//   league.csv, league.json                          league
//   cohort_coefficients.csv, cohort_variance_components.csv   cohort
//   spatial/<outcome>/...                            spatial
//   representational/...                             representational
//   manifests/<stage>.json                           every stage
namespace layout {
inline constexpr const char* kMetrics = "metrics.csv";
inline constexpr const char* kExclusions = "exclusions.csv";
inline constexpr const char* kGaps = "univariate_gaps.csv";
inline constexpr const char* kAgeBins = "univariate_age_bins.csv";
inline constexpr const char* kInequality = "inequality.csv";
inline constexpr const char* kLeagueCsv = "league.csv";
inline constexpr const char* kLeagueJson = "league.json";
inline constexpr const char* kCoefficients = "cohort_coefficients.csv";
inline constexpr const char* kVariance = "cohort_variance_components.csv";
inline constexpr const char* kSpatial = "spatial";
inline constexpr const char* kRepresentational = "representational";
inline constexpr const char* kGroundTruth = "ground_truth";
}  // namespace layout

// Progress messages; a no-op by default.
using Logger = std::function<void(const std::string&)>;

struct StageReport {
  std::string stage;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> notes;
};

StageReport cmd_evaluate(const AnalysisConfig& config, const Logger& log = {});
StageReport cmd_univariate(const AnalysisConfig& config, const Logger& log = {});
StageReport cmd_inequality(const AnalysisConfig& config, const Logger& log = {});
StageReport cmd_league(const AnalysisConfig& config, const Logger& log = {});
StageReport cmd_cohort(const AnalysisConfig& config, const Logger& log = {});
StageReport cmd_spatial(const AnalysisConfig& config, const Logger& log = {});
StageReport cmd_representational(const AnalysisConfig& config, const Logger& log = {});
// Every stage in order.
std::vector<StageReport> cmd_all(const AnalysisConfig& config, const Logger& log = {});

// Volume files of a directory keyed by patient id (".nii" / ".nii.gz" stripped).
std::vector<std::pair<std::string, std::filesystem::path>> list_volumes(const std::filesystem::path& dir);

}  // namespace fairboard
