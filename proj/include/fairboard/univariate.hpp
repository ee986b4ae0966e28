#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fairboard/cohort.hpp"
#include "fairboard/csv.hpp"
#include "fairboard/seg_metrics.hpp"

namespace fairboard::univariate {

// Two-group split of the cohort; group_of returns true for group A, false for
// group B and nullopt for patients outside both.
struct BinaryFactor {
  std::string name;
  std::string level_a;
  std::string level_b;
  std::function<std::optional<bool>(const CohortRow&)> group_of;
};

// sex (M vs F), source (UPENN-GBM vs UCSF-PDGM), grade (4 vs non-4),
// resection (GTR vs STR), diagnosis (GBM vs IDH-mutant non-GBM).
const std::vector<BinaryFactor>& binary_factors();

struct AgeBin {
  std::string label;
  double lower;
  double upper;  // exclusive
};
// <30, 30-39, ..., 70-79, 80+.
const std::vector<AgeBin>& age_bins();

struct GapRow {
  std::string model_id;
  std::string factor;
  std::string outcome;
  std::string level_a;
  std::string level_b;
  std::size_t n_a;
  std::size_t n_b;
  double mean_a;
  double mean_b;
  double gap;
  double lower;
  double upper;
};

struct AgeBinRow {
  std::string model_id;
  std::string outcome;
  std::string bin;
  std::size_t n;
  double mean;
};

struct UnivariateResult {
  std::vector<GapRow> gaps;
  std::vector<AgeBinRow> age_bins;

  CsvTable gap_table() const;
  CsvTable age_bin_table() const;
};

// Gap = mean(A) - mean(B) per model, factor and outcome with a percentile
// bootstrap interval. A stratum without observations yields a missing row.
UnivariateResult run_univariate(const std::vector<MetricRecord>& records, const std::vector<CohortRow>& cohort,
                                const std::vector<std::size_t>& outcomes, int n_iter, std::uint64_t seed,
                                bool exclude_oedema_only = true);

}  // namespace fairboard::univariate
