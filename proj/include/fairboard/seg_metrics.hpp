#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "fairboard/compartments.hpp"

namespace fairboard {

enum class Metric { Dice = 0, Sensitivity, Precision, Hd95, Nsd1mm, Asd, VolSim };

inline constexpr std::array<Metric, 7> kMetrics{Metric::Dice,   Metric::Sensitivity, Metric::Precision, Metric::Hd95,
                                                Metric::Nsd1mm, Metric::Asd,         Metric::VolSim};
inline constexpr std::size_t kOutcomeCount = 28;

// Column stem for the metric: dice, sensitivity, precision, hd95_mm, nsd_1mm, asd_mm, vol_sim.
std::string_view name(Metric m);
Metric metric_from_name(std::string_view s);
bool higher_is_better(Metric m);

// Outcome o = compartment * 7 + metric; column name "<COMP>_<metric>", e.g. "WT_dice".
inline std::size_t outcome_index(Compartment c, Metric m) {
  return static_cast<std::size_t>(c) * kMetrics.size() + static_cast<std::size_t>(m);
}
Compartment outcome_compartment(std::size_t o);
Metric outcome_metric(std::size_t o);
std::string outcome_name(std::size_t o);
std::size_t outcome_from_name(std::string_view s);

// 28 performance values for one patient-model pair. NaN is missing.
struct MetricRecord {
  std::string patient_id;
  std::string model_id;
  std::array<double, kOutcomeCount> values;
  // Ground truth has oedema and nothing else; such cases are excluded downstream.
  bool gt_oedema_only = false;

  MetricRecord();
  double& at(Compartment c, Metric m) { return values[outcome_index(c, m)]; }
  double at(Compartment c, Metric m) const { return values[outcome_index(c, m)]; }
};

struct Overlap {
  double dice;
  double sensitivity;
  double precision;
};

// Confusion-count overlap. A vanishing denominator yields NaN.
Overlap overlap_metrics(const CompartmentMask& pred, const CompartmentMask& gt);

struct SurfaceDistances {
  std::vector<double> pred_to_gt;  // one entry per pred boundary voxel
  std::vector<double> gt_to_pred;  // one entry per gt boundary voxel
};

// Boundary voxels are foreground voxels with at least one background
// 6-neighbour; the volume border counts as background. Each boundary voxel is
// matched to the nearest boundary voxel of the other mask, distances in mm.
// Throws EmptyMask when either mask is empty.
SurfaceDistances surface_distances(const CompartmentMask& pred, const CompartmentMask& gt);

std::vector<std::size_t> boundary_voxels(const Volume& mask);

struct DistanceMetrics {
  double hd95;
  double asd;
  double nsd;
};

// hd95 and asd over the pooled distances; nsd counts boundary voxels of both
// sides lying within tolerance_mm of the other surface.
DistanceMetrics distance_metrics(const SurfaceDistances& d, double tolerance_mm = 1.0);

// 1 - |Vp - Vg| / (Vp + Vg), volumes in voxels. Throws BothEmpty.
double volume_similarity(const CompartmentMask& pred, const CompartmentMask& gt);

struct CaseOptions {
  // Two-class models do not predict NET; their NET entries are left missing.
  bool net_supported = true;
};

// All 28 metrics for one case.
//   both masks empty   -> every metric of that compartment missing
//   pred empty only    -> dice = sensitivity = precision = 0, vol_sim by formula, distances missing
//   gt empty only      -> dice = precision = 0, sensitivity missing, vol_sim by formula, distances missing
MetricRecord evaluate_case(const CompartmentMasks& pred, const CompartmentMasks& gt, std::string patient_id,
                           std::string model_id, const CaseOptions& options = {});
MetricRecord evaluate_case(const Volume& pred_labels, const Volume& gt_labels, std::string patient_id,
                           std::string model_id, const LabelMap& label_map = LabelMap::defaults(),
                           const CaseOptions& options = {});

}  // namespace fairboard
