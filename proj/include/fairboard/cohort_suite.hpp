#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairboard/cohort.hpp"
#include "fairboard/csv.hpp"
#include "fairboard/design.hpp"
#include "fairboard/lme.hpp"
#include "fairboard/seg_metrics.hpp"

namespace fairboard::lme {

// WT/NET/ET/OED x dice, sensitivity, precision, hd95.
std::vector<std::size_t> default_cohort_outcomes();

struct CohortSuiteOptions {
  std::vector<std::size_t> outcomes = default_cohort_outcomes();
  stats::PredictorSpec predictors = [] {
    auto s = stats::PredictorSpec::cohort_layout();
    s.drop_absent_levels = true;
    return s;
  }();
  bool exclude_oedema_only = true;
  double alpha = 0.05;
  LmeOptions lme;
};

struct CoefficientRow {
  std::string dv;
  std::string term;
  double beta;
  double se;
  double p;
  bool fdr_significant;
};

struct DvFit {
  std::string dv;
  std::optional<LmeFit> fit;
  std::string error;
};

struct CohortSuiteResult {
  std::vector<DvFit> fits;
  // Non-intercept terms of every DV; failed DVs contribute missing rows.
  std::vector<CoefficientRow> coefficients;

  CsvTable coefficient_table() const;
  CsvTable variance_table() const;
};

// One crossed-intercept fit per outcome. Each outcome is z-scored over its
// pooled observations; BH-FDR runs per term across outcomes. A failing
// outcome is recorded in its DvFit and the suite continues.
CohortSuiteResult run_cohort_suite(const std::vector<MetricRecord>& records, const std::vector<CohortRow>& cohort,
                                   const CohortSuiteOptions& options = {});

}  // namespace fairboard::lme
