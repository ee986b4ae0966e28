#include "fairboard/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fairboard/error.hpp"

namespace fairboard {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> opt_number(const std::string& s) {
  const double v = parse_number(s);
  if (is_missing(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::string> diagnosis_class(const CohortRow& row) {
  if (row.diagnosis.empty()) return std::nullopt;
  return lower(row.diagnosis).rfind("glioblastoma", 0) == 0 ? "GBM" : "Non-GBM";
}

bool diagnosis_is_idh_mutant(const CohortRow& row) {
  return lower(row.diagnosis).find("idh-mutant") != std::string::npos;
}

std::vector<CohortRow> cohort_from_csv(const CsvTable& table) {
  const std::size_t c_id = table.require_column("patient_id");
  auto col = [&](const char* name) { return table.column(name); };
  const auto c_sex = col("sex"), c_age = col("age_years"), c_source = col("source"), c_grade = col("who_grade"),
             c_res = col("resection"), c_diag = col("diagnosis"), c_idh = col("idh"), c_surv = col("survival_days");
  auto get = [](const std::vector<std::string>& r, const std::optional<std::size_t>& c) -> std::string {
    return c ? r[*c] : std::string{};
  };

  std::vector<CohortRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    CohortRow row;
    row.patient_id = r[c_id];
    if (row.patient_id.empty()) throw Error(ErrorCode::ParseError, "cohort row without patient_id");
    row.sex = get(r, c_sex);
    row.age_years = opt_number(get(r, c_age));
    row.source = get(r, c_source);
    if (auto g = opt_number(get(r, c_grade))) row.who_grade = static_cast<int>(std::lround(*g));
    row.resection = get(r, c_res);
    row.diagnosis = get(r, c_diag);
    row.idh = get(r, c_idh);
    row.survival_days = opt_number(get(r, c_surv));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CohortRow> read_cohort(const std::filesystem::path& path) {
  return cohort_from_csv(read_csv(path));
}

CsvTable cohort_to_csv(const std::vector<CohortRow>& rows) {
  CsvTable t;
  t.header = {"patient_id", "sex", "age_years", "source", "who_grade", "resection", "diagnosis", "idh", "survival_days"};
  for (const auto& r : rows) {
    t.rows.push_back({r.patient_id, r.sex, r.age_years ? format_number(*r.age_years) : "", r.source,
                      r.who_grade ? std::to_string(*r.who_grade) : "", r.resection, r.diagnosis, r.idh,
                      r.survival_days ? format_number(*r.survival_days) : ""});
  }
  return t;
}

const CohortRow* find_patient(const std::vector<CohortRow>& rows, const std::string& patient_id) {
  for (const auto& r : rows)
    if (r.patient_id == patient_id) return &r;
  return nullptr;
}

}  // namespace fairboard
