#include "fairboard/metrics_table.hpp"

#include <algorithm>

#include "fairboard/error.hpp"

namespace fairboard {

CsvTable metrics_to_csv(const std::vector<MetricRecord>& records) {
  CsvTable t;
  t.header = {"patient_id", "model_id", "gt_oedema_only"};
  for (std::size_t o = 0; o < kOutcomeCount; ++o) t.header.push_back(outcome_name(o));
  for (const auto& r : records) {
    std::vector<std::string> row{r.patient_id, r.model_id, r.gt_oedema_only ? "1" : "0"};
    for (double v : r.values) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<MetricRecord> metrics_from_csv(const CsvTable& table) {
  const std::size_t pid = table.require_column("patient_id");
  const std::size_t mid = table.require_column("model_id");
  const auto oed = table.column("gt_oedema_only");
  std::array<std::optional<std::size_t>, kOutcomeCount> cols;
  for (std::size_t o = 0; o < kOutcomeCount; ++o) cols[o] = table.column(outcome_name(o));

  std::vector<MetricRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    MetricRecord r;
    r.patient_id = row.at(pid);
    r.model_id = row.at(mid);
    if (oed) r.gt_oedema_only = row.at(*oed) == "1" || row.at(*oed) == "true";
    for (std::size_t o = 0; o < kOutcomeCount; ++o)
      if (cols[o]) r.values[o] = parse_number(row.at(*cols[o]));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) { return metrics_from_csv(read_csv(path)); }

std::vector<std::string> model_ids(const std::vector<MetricRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (std::find(ids.begin(), ids.end(), r.model_id) == ids.end()) ids.push_back(r.model_id);
  return ids;
}

}  // namespace fairboard
