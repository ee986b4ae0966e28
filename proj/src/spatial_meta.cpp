#include "fairboard/spatial_meta.hpp"

#include <algorithm>
#include <cmath>

#include "fairboard/design.hpp"
#include "fairboard/error.hpp"
#include "fairboard/rng.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::spatial {

namespace {

DlVoxel pool_moments(double sum, double sum_sq, int k) {
  const double kd = k;
  const double mean = sum / kd;
  const double q = std::max(0.0, sum_sq - kd * mean * mean);
  const double tau2 = std::max(0.0, (q - (kd - 1.0)) / (kd - 1.0));
  const double z = mean / std::sqrt((1.0 + tau2) / kd);
  const double i2 = q > 0.0 ? std::max(0.0, (q - (kd - 1.0)) / q) * 100.0 : 0.0;
  return {z, tau2, q, i2};
}

void check_maps(std::span<const stats::ZMap> maps) {
  if (maps.size() < 2) throw Error(ErrorCode::TooFewStudies, "meta-analysis needs at least two maps");
  for (const auto& m : maps)
    if (!m.same_grid(maps.front())) throw Error(ErrorCode::GridMismatch, "z maps on different grids");
}

bool present(const stats::ZMap& m, std::size_t v) { return m.mask[v] && std::isfinite(m.z[v]); }

Volume field_volume(const stats::ZMap& geometry, const std::vector<double>& values) {
  Volume v = Volume::zeros(geometry.dims, geometry.spacing, Dtype::F32);
  v.affine = geometry.affine;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (geometry.mask[i]) v.data[i] = values[i];
  return v;
}

}  // namespace

DlVoxel dl_pool(std::span<const double> z) {
  if (z.size() < 2) throw Error(ErrorCode::TooFewStudies, "pooling needs at least two studies");
  const double mean = stats::mean(z);
  double q = 0.0;
  for (double v : z) q += (v - mean) * (v - mean);
  const double kd = static_cast<double>(z.size());
  const double tau2 = std::max(0.0, (q - (kd - 1.0)) / (kd - 1.0));
  const double i2 = q > 0.0 ? std::max(0.0, (q - (kd - 1.0)) / q) * 100.0 : 0.0;
  return {mean / std::sqrt((1.0 + tau2) / kd), tau2, q, i2};
}

Volume MetaResult::tau2_volume() const { return field_volume(pooled_z, tau2); }
Volume MetaResult::i2_volume() const { return field_volume(pooled_z, i2); }
Volume MetaResult::fdr_volume() const {
  Volume v = Volume::zeros(pooled_z.dims, pooled_z.spacing, Dtype::U8);
  v.affine = pooled_z.affine;
  for (std::size_t i = 0; i < fdr_mask.size(); ++i) v.data[i] = fdr_mask[i];
  return v;
}

MetaResult dersimonian_laird(std::span<const stats::ZMap> maps, double alpha) {
  check_maps(maps);
  const auto& g = maps.front();
  MetaResult r;
  r.alpha = alpha;
  r.pooled_z = g;
  r.pooled_z.z.assign(g.size(), kMissing);
  r.pooled_z.mask.assign(g.size(), 0);
  r.pooled_z.df = 0.0;
  r.tau2.assign(g.size(), kMissing);
  r.q.assign(g.size(), kMissing);
  r.i2.assign(g.size(), kMissing);
  r.k.assign(g.size(), 0);
  r.fdr_mask.assign(g.size(), 0);

  std::vector<double> zs;
  std::vector<std::size_t> voxels;
  std::vector<double> pvals;
  for (std::size_t v = 0; v < g.size(); ++v) {
    zs.clear();
    for (const auto& m : maps)
      if (present(m, v)) zs.push_back(m.z[v]);
    r.k[v] = static_cast<int>(zs.size());
    if (zs.size() < 2) continue;
    const DlVoxel d = dl_pool(zs);
    r.pooled_z.mask[v] = 1;
    r.pooled_z.z[v] = d.z;
    r.tau2[v] = d.tau2;
    r.q[v] = d.q;
    r.i2[v] = d.i2;
    voxels.push_back(v);
    pvals.push_back(stats::two_sided_p(d.z));
  }
  const auto fdr = stats::bh_fdr(pvals, alpha);
  r.fdr_threshold = fdr.threshold;
  for (std::size_t i = 0; i < voxels.size(); ++i) r.fdr_mask[voxels[i]] = fdr.significant[i] ? 1 : 0;
  return r;
}

PermutationResult sign_flip_permutation(std::span<const stats::ZMap> maps, int n_perm, std::uint64_t seed) {
  check_maps(maps);
  if (n_perm < 1) throw Error(ErrorCode::InvalidArgument, "n_perm must be positive");
  const std::size_t nmaps = maps.size();
  const std::size_t nvox = maps.front().size();

  // Pooled voxels only, as dense per-map columns with presence flags.
  std::vector<std::size_t> voxels;
  for (std::size_t v = 0; v < nvox; ++v) {
    int k = 0;
    for (const auto& m : maps) k += present(m, v);
    if (k >= 2) voxels.push_back(v);
  }
  const std::size_t nv = voxels.size();
  std::vector<double> z(nmaps * nv, 0.0);
  std::vector<double> sum_sq(nv, 0.0);
  std::vector<int> k(nv, 0);
  for (std::size_t j = 0; j < nmaps; ++j)
    for (std::size_t i = 0; i < nv; ++i)
      if (present(maps[j], voxels[i])) {
        const double val = maps[j].z[voxels[i]];
        z[j * nv + i] = val;
        sum_sq[i] += val * val;
        ++k[i];
      }

  std::vector<double> sum(nv);
  auto max_abs = [&](const std::vector<double>& sign) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < nmaps; ++j) {
      const double s = sign[j];
      const double* col = &z[j * nv];
      for (std::size_t i = 0; i < nv; ++i) sum[i] += s * col[i];
    }
    double best = 0.0;
    for (std::size_t i = 0; i < nv; ++i) best = std::max(best, std::fabs(pool_moments(sum[i], sum_sq[i], k[i]).z));
    return best;
  };

  PermutationResult r;
  r.n_perm = n_perm;
  std::vector<double> sign(nmaps, 1.0);
  r.observed_max = max_abs(sign);
  r.null_max.resize(static_cast<std::size_t>(n_perm));
  int exceed = 0;
  for (int p = 0; p < n_perm; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    for (auto& s : sign) s = rng.coin() ? 1.0 : -1.0;
    const double m = max_abs(sign);
    r.null_max[static_cast<std::size_t>(p)] = m;
    exceed += m >= r.observed_max;
  }
  r.null_p95 = stats::percentile(r.null_max, 95.0);
  r.fwe_p = (1.0 + exceed) / (n_perm + 1.0);
  return r;
}

Volume prevalence_map(std::span<const stats::ZMap> maps, double alpha) {
  if (maps.empty()) throw Error(ErrorCode::TooFewStudies, "no maps");
  for (const auto& m : maps)
    if (!m.same_grid(maps.front())) throw Error(ErrorCode::GridMismatch, "z maps on different grids");
  const auto& g = maps.front();
  std::vector<double> net(g.size(), 0.0);
  for (const auto& m : maps) {
    std::vector<std::size_t> voxels;
    std::vector<double> pvals;
    for (std::size_t v = 0; v < m.size(); ++v)
      if (present(m, v)) {
        voxels.push_back(v);
        pvals.push_back(stats::two_sided_p(m.z[v]));
      }
    const auto fdr = stats::bh_fdr(pvals, alpha);
    for (std::size_t i = 0; i < voxels.size(); ++i)
      if (fdr.significant[i]) net[voxels[i]] += m.z[voxels[i]] > 0 ? 1.0 : -1.0;
  }
  Volume v = Volume::zeros(g.dims, g.spacing, Dtype::F32);
  v.affine = g.affine;
  const double k = static_cast<double>(maps.size());
  for (std::size_t i = 0; i < net.size(); ++i) v.data[i] = net[i] / k;
  return v;
}

HeterogeneitySummary heterogeneity_summary(const MetaResult& meta) {
  HeterogeneitySummary s;
  std::vector<double> all, nonzero;
  for (std::size_t v = 0; v < meta.i2.size(); ++v) {
    if (!meta.pooled_z.mask[v]) continue;
    const double f = meta.i2[v] / 100.0;
    all.push_back(f);
    if (f > 0.0) nonzero.push_back(f);
  }
  s.n_voxels = all.size();
  if (all.empty()) return s;
  s.median_all = stats::median(all);
  s.fraction_nonzero = static_cast<double>(nonzero.size()) / static_cast<double>(all.size());
  if (!nonzero.empty()) {
    s.median_nonzero = stats::median(nonzero);
    s.q1_nonzero = stats::percentile(nonzero, 25.0);
    s.q3_nonzero = stats::percentile(nonzero, 75.0);
  }
  return s;
}

stats::ZMap per_model_spatial_glm(std::span<const Volume> images, std::span<const double> perf,
                                  const std::vector<CohortRow>& patients, const Volume* brain_mask) {
  if (images.size() != perf.size() || images.size() != patients.size())
    throw Error(ErrorCode::InvalidArgument, "images, perf and patients must align");
  std::vector<CohortRow> rows;
  std::vector<double> perf_kept;
  std::vector<std::size_t> source_index;
  for (std::size_t i = 0; i < perf.size(); ++i) {
    if (!std::isfinite(perf[i])) continue;
    rows.push_back(patients[i]);
    perf_kept.push_back(perf[i]);
    source_index.push_back(i);
  }

  using stats::PredictorSpec;
  PredictorSpec spec;
  spec.drop_absent_levels = true;
  spec.terms = {stats::Term::continuous("Perf", [&](const CohortRow&, std::size_t i) -> std::optional<double> {
                  return perf_kept[i];
                }),
                PredictorSpec::age(),       PredictorSpec::sex(),    PredictorSpec::diagnosis(),
                PredictorSpec::resection(), PredictorSpec::source(), PredictorSpec::survival()};
  const auto design = stats::build_design(rows, spec);

  std::vector<Volume> obs;
  obs.reserve(design.rows.size());
  for (std::size_t r : design.rows) obs.push_back(images[source_index[r]]);
  return stats::mass_univariate_glm(obs, design, "Perf", brain_mask);
}

}  // namespace fairboard::spatial
