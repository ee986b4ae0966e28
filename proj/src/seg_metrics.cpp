#include "fairboard/seg_metrics.hpp"

#include <cmath>
#include <limits>

#include "fairboard/error.hpp"
#include "fairboard/stats.hpp"

namespace fairboard {

std::string_view name(Metric m) {
  switch (m) {
    case Metric::Dice: return "dice";
    case Metric::Sensitivity: return "sensitivity";
    case Metric::Precision: return "precision";
    case Metric::Hd95: return "hd95_mm";
    case Metric::Nsd1mm: return "nsd_1mm";
    case Metric::Asd: return "asd_mm";
    case Metric::VolSim: return "vol_sim";
  }
  return "?";
}

Metric metric_from_name(std::string_view s) {
  for (Metric m : kMetrics)
    if (name(m) == s) return m;
  if (s == "hd95") return Metric::Hd95;
  if (s == "asd") return Metric::Asd;
  if (s == "nsd") return Metric::Nsd1mm;
  throw Error(ErrorCode::ParseError, "unknown metric '" + std::string(s) + "'");
}

bool higher_is_better(Metric m) { return m != Metric::Hd95 && m != Metric::Asd; }

Compartment outcome_compartment(std::size_t o) { return kCompartments[o / kMetrics.size()]; }
Metric outcome_metric(std::size_t o) { return kMetrics[o % kMetrics.size()]; }

std::string outcome_name(std::size_t o) {
  return std::string(name(outcome_compartment(o))) + "_" + std::string(name(outcome_metric(o)));
}

std::size_t outcome_from_name(std::string_view s) {
  const auto us = s.find('_');
  if (us == std::string_view::npos) throw Error(ErrorCode::ParseError, "bad outcome name '" + std::string(s) + "'");
  return outcome_index(compartment_from_name(s.substr(0, us)), metric_from_name(s.substr(us + 1)));
}

MetricRecord::MetricRecord() { values.fill(kMissing); }

namespace {

void require_same_grid(const Volume& a, const Volume& b) {
  if (!a.same_grid(b)) throw Error(ErrorCode::GridMismatch, "masks are on different grids");
}

struct Counts {
  double tp = 0, fp = 0, fn = 0;
};

Counts confusion(const Volume& pred, const Volume& gt) {
  Counts c;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0.0, g = gt.data[i] != 0.0;
    c.tp += p && g;
    c.fp += p && !g;
    c.fn += !p && g;
  }
  return c;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : kMissing; }

constexpr double kInf = std::numeric_limits<double>::infinity();

// One pass of the lower-envelope squared distance transform along a line.
// f holds squared distances (inf = no site) and feat the site each came from;
// positions are scaled by step (mm per voxel along the axis).
void envelope_pass(std::vector<double>& f, std::vector<std::ptrdiff_t>& feat, std::size_t n, double step,
                   std::vector<int>& v, std::vector<double>& zb, std::vector<double>& g,
                   std::vector<std::ptrdiff_t>& gfeat) {
  const double w = step * step;
  int k = -1;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double fq = f[q] / w;
    const double qd = static_cast<double>(q);
    while (k >= 0) {
      const double p = static_cast<double>(v[static_cast<std::size_t>(k)]);
      const double fp = f[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])] / w;
      const double s = ((fq + qd * qd) - (fp + p * p)) / (2.0 * qd - 2.0 * p);
      if (s <= zb[static_cast<std::size_t>(k)]) {
        --k;
        continue;
      }
      ++k;
      v[static_cast<std::size_t>(k)] = static_cast<int>(q);
      zb[static_cast<std::size_t>(k)] = s;
      break;
    }
    if (k < 0) {
      k = 0;
      v[0] = static_cast<int>(q);
      zb[0] = -kInf;
    }
  }
  if (k < 0) return;  // no sites on this line
  int j = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double qd = static_cast<double>(q);
    while (j < k && zb[static_cast<std::size_t>(j) + 1] < qd) ++j;
    const auto p = static_cast<std::size_t>(v[static_cast<std::size_t>(j)]);
    const double d = qd - static_cast<double>(p);
    g[q] = f[p] + w * d * d;
    gfeat[q] = feat[p];
  }
  for (std::size_t q = 0; q < n; ++q) {
    f[q] = g[q];
    feat[q] = gfeat[q];
  }
}

// Nearest site (linear index) for every voxel; sites given by a boolean map.
std::vector<std::ptrdiff_t> feature_transform(const Volume& grid, const std::vector<char>& site) {
  const std::size_t n = grid.size();
  std::vector<double> f(n);
  std::vector<std::ptrdiff_t> feat(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = site[i] ? 0.0 : kInf;
    if (site[i]) feat[i] = static_cast<std::ptrdiff_t>(i);
  }
  const std::array<std::size_t, 3> dims{static_cast<std::size_t>(grid.dims[0]), static_cast<std::size_t>(grid.dims[1]),
                                        static_cast<std::size_t>(grid.dims[2])};
  const std::array<std::size_t, 3> stride{1, dims[0], dims[0] * dims[1]};
  const std::size_t maxd = std::max({dims[0], dims[1], dims[2]});
  std::vector<double> lf(maxd), zb(maxd + 1), g(maxd);
  std::vector<std::ptrdiff_t> lfeat(maxd), gfeat(maxd);
  std::vector<int> v(maxd);

  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t len = dims[axis];
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (std::size_t i2 = 0; i2 < dims[a2]; ++i2) {
      for (std::size_t i1 = 0; i1 < dims[a1]; ++i1) {
        const std::size_t base = i1 * stride[a1] + i2 * stride[a2];
        for (std::size_t q = 0; q < len; ++q) {
          lf[q] = f[base + q * stride[axis]];
          lfeat[q] = feat[base + q * stride[axis]];
        }
        envelope_pass(lf, lfeat, len, grid.spacing[axis], v, zb, g, gfeat);
        for (std::size_t q = 0; q < len; ++q) {
          f[base + q * stride[axis]] = lf[q];
          feat[base + q * stride[axis]] = lfeat[q];
        }
      }
    }
  }
  return feat;
}

double voxel_distance(const Volume& grid, std::size_t a, std::size_t b) {
  const auto ca = grid.coords(a), cb = grid.coords(b);
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = (ca[k] - cb[k]) * grid.spacing[k];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> directed_distances(const Volume& grid, const std::vector<std::size_t>& from,
                                       const std::vector<std::size_t>& to) {
  std::vector<char> site(grid.size(), 0);
  for (std::size_t i : to) site[i] = 1;
  const auto feat = feature_transform(grid, site);
  std::vector<double> out;
  out.reserve(from.size());
  for (std::size_t i : from) out.push_back(voxel_distance(grid, i, static_cast<std::size_t>(feat[i])));
  return out;
}

}  // namespace

Overlap overlap_metrics(const CompartmentMask& pred, const CompartmentMask& gt) {
  require_same_grid(pred.volume, gt.volume);
  const Counts c = confusion(pred.volume, gt.volume);
  return {ratio(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn), ratio(c.tp, c.tp + c.fn), ratio(c.tp, c.tp + c.fp)};
}

std::vector<std::size_t> boundary_voxels(const Volume& mask) {
  std::vector<std::size_t> out;
  const auto& d = mask.dims;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (mask.at(x, y, z) == 0.0) continue;
        const bool edge = x == 0 || y == 0 || z == 0 || x == d[0] - 1 || y == d[1] - 1 || z == d[2] - 1;
        if (edge || mask.at(x - 1, y, z) == 0.0 || mask.at(x + 1, y, z) == 0.0 || mask.at(x, y - 1, z) == 0.0 ||
            mask.at(x, y + 1, z) == 0.0 || mask.at(x, y, z - 1) == 0.0 || mask.at(x, y, z + 1) == 0.0)
          out.push_back(mask.index(x, y, z));
      }
  return out;
}

SurfaceDistances surface_distances(const CompartmentMask& pred, const CompartmentMask& gt) {
  require_same_grid(pred.volume, gt.volume);
  const auto bp = boundary_voxels(pred.volume);
  const auto bg = boundary_voxels(gt.volume);
  if (bp.empty() || bg.empty()) throw Error(ErrorCode::EmptyMask, "surface distances need two nonempty masks");
  return {directed_distances(gt.volume, bp, bg), directed_distances(gt.volume, bg, bp)};
}

DistanceMetrics distance_metrics(const SurfaceDistances& d, double tolerance_mm) {
  if (d.pred_to_gt.empty() || d.gt_to_pred.empty())
    throw Error(ErrorCode::EmptyMask, "distance metrics need two nonempty distance sets");
  std::vector<double> pooled(d.pred_to_gt);
  pooled.insert(pooled.end(), d.gt_to_pred.begin(), d.gt_to_pred.end());
  std::size_t within = 0;
  for (double x : pooled) within += x <= tolerance_mm;
  DistanceMetrics m;
  m.asd = stats::mean(pooled);
  m.nsd = static_cast<double>(within) / static_cast<double>(pooled.size());
  m.hd95 = stats::percentile(std::move(pooled), 95.0);
  return m;
}

double volume_similarity(const CompartmentMask& pred, const CompartmentMask& gt) {
  require_same_grid(pred.volume, gt.volume);
  const double vp = static_cast<double>(pred.count()), vg = static_cast<double>(gt.count());
  if (vp + vg == 0.0) throw Error(ErrorCode::BothEmpty, "volume similarity of two empty masks");
  return 1.0 - std::fabs(vp - vg) / (vp + vg);
}

MetricRecord evaluate_case(const CompartmentMasks& pred, const CompartmentMasks& gt, std::string patient_id,
                           std::string model_id, const CaseOptions& options) {
  MetricRecord rec;
  rec.patient_id = std::move(patient_id);
  rec.model_id = std::move(model_id);
  rec.gt_oedema_only = is_oedema_only(gt);
  for (Compartment c : kCompartments) {
    if (c == Compartment::NET && !options.net_supported) continue;
    const auto& p = pred[static_cast<int>(c)];
    const auto& g = gt[static_cast<int>(c)];
    require_same_grid(p.volume, g.volume);
    const bool pe = p.empty(), ge = g.empty();
    if (pe && ge) continue;
    const Overlap o = overlap_metrics(p, g);
    rec.at(c, Metric::Dice) = o.dice;
    rec.at(c, Metric::Sensitivity) = o.sensitivity;
    rec.at(c, Metric::Precision) = pe ? 0.0 : o.precision;
    rec.at(c, Metric::VolSim) = volume_similarity(p, g);
    if (pe || ge) continue;
    const DistanceMetrics dm = distance_metrics(surface_distances(p, g));
    rec.at(c, Metric::Hd95) = dm.hd95;
    rec.at(c, Metric::Asd) = dm.asd;
    rec.at(c, Metric::Nsd1mm) = dm.nsd;
  }
  return rec;
}

MetricRecord evaluate_case(const Volume& pred_labels, const Volume& gt_labels, std::string patient_id,
                           std::string model_id, const LabelMap& label_map, const CaseOptions& options) {
  if (!pred_labels.same_grid(gt_labels)) throw Error(ErrorCode::GridMismatch, "prediction and ground truth grids differ");
  return evaluate_case(extract_compartments(pred_labels, label_map), extract_compartments(gt_labels, label_map),
                       std::move(patient_id), std::move(model_id), options);
}

}  // namespace fairboard
