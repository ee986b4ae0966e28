#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairboard/csv.hpp"

namespace fairboard {

// One patient's covariates. Empty strings and nullopt mean missing.
//
// Cohort CSV schema (unknown columns ignored, blanks are missing):
//   patient_id, sex{M,F}, age_years, source, who_grade{2,3,4},
//   resection{GTR,STR,Biopsy}, diagnosis, idh{mutant,wildtype}, survival_days
struct CohortRow {
  std::string patient_id;
  std::string sex;
  std::optional<double> age_years;
  std::string source;
  std::optional<int> who_grade;
  std::string resection;
  std::string diagnosis;
  std::string idh;
  std::optional<double> survival_days;
};

inline constexpr const char* kGbmDiagnosis = "Glioblastoma, IDH-wildtype";

// "GBM" for glioblastoma diagnoses, "Non-GBM" otherwise, nullopt when missing.
std::optional<std::string> diagnosis_class(const CohortRow& row);
bool diagnosis_is_idh_mutant(const CohortRow& row);

std::vector<CohortRow> cohort_from_csv(const CsvTable& table);
std::vector<CohortRow> read_cohort(const std::filesystem::path& path);
CsvTable cohort_to_csv(const std::vector<CohortRow>& rows);

const CohortRow* find_patient(const std::vector<CohortRow>& rows, const std::string& patient_id);

}  // namespace fairboard
