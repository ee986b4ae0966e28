#pragma once

#include <filesystem>
#include <vector>

#include "fairboard/csv.hpp"
#include "fairboard/seg_metrics.hpp"

namespace fairboard {

// Columns: patient_id, model_id, gt_oedema_only (0/1), then the 28 outcome
// names (WT_dice ... OED_vol_sim). Blank cells are missing.
CsvTable metrics_to_csv(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> metrics_from_csv(const CsvTable& table);
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

// Distinct model ids in order of first appearance.
std::vector<std::string> model_ids(const std::vector<MetricRecord>& records);

}  // namespace fairboard
