#include "fairboard/latent.hpp"

#include <algorithm>
#include <cmath>

#include "fairboard/design.hpp"
#include "fairboard/error.hpp"
#include "fairboard/smoothing.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::repr {

std::size_t LatentRaster::cell_of(Eigen::Index i) const {
  const auto x = static_cast<std::size_t>(std::clamp<long>(std::lround(points(i, 0)), 0, grid - 1));
  const auto y = static_cast<std::size_t>(std::clamp<long>(std::lround(points(i, 1)), 0, grid - 1));
  return y * static_cast<std::size_t>(grid) + x;
}

std::vector<double> LatentRaster::spike(Eigen::Index i) const {
  const double sigma = stats::sigma_from_fwhm(spike_fwhm);
  const double reach = 4.0 * sigma;
  const double px = points(i, 0), py = points(i, 1);
  std::vector<double> img(cells(), 0.0);
  const int x0 = std::max(0, static_cast<int>(std::floor(px - reach)));
  const int x1 = std::min(grid - 1, static_cast<int>(std::ceil(px + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(py - reach)));
  const int y1 = std::min(grid - 1, static_cast<int>(std::ceil(py + reach)));
  double mass = 0.0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double r2 = (x - px) * (x - px) + (y - py) * (y - py);
      if (r2 > reach * reach) continue;
      const double v = std::exp(-0.5 * r2 / (sigma * sigma));
      img[static_cast<std::size_t>(y) * static_cast<std::size_t>(grid) + static_cast<std::size_t>(x)] = v;
      mass += v;
    }
  for (double& v : img) v /= mass;
  return img;
}

Eigen::MatrixXd LatentRaster::spike_matrix(const std::vector<std::size_t>& cells_wanted) const {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd y(n, static_cast<Eigen::Index>(cells_wanted.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto img = spike(i);
    for (std::size_t c = 0; c < cells_wanted.size(); ++c) y(i, static_cast<Eigen::Index>(c)) = img[cells_wanted[c]];
  }
  return y;
}

Volume LatentRaster::geometry() const { return Volume::zeros({grid, grid, 1}, {1.0, 1.0, 1.0}, Dtype::F32); }

LatentRaster rasterize_latent(const Eigen::MatrixXd& coords, int grid, double spike_fwhm) {
  if (coords.cols() != 2 || coords.rows() < 1) throw Error(ErrorCode::InvalidArgument, "coordinates must be n x 2");
  if (!coords.allFinite()) throw Error(ErrorCode::NonFiniteInput, "non-finite latent coordinates");
  LatentRaster r;
  r.grid = grid;
  r.spike_fwhm = spike_fwhm;
  const Eigen::RowVector2d lo = coords.colwise().minCoeff(), hi = coords.colwise().maxCoeff();
  const double extent = std::max(hi(0) - lo(0), hi(1) - lo(1));
  const double usable = (grid - 1) * (1.0 - 2.0 * kMargin);
  const double scale = extent > 0.0 ? usable / extent : 0.0;
  const Eigen::RowVector2d centre = 0.5 * (lo + hi);
  const double mid = 0.5 * (grid - 1);
  r.points.resize(coords.rows(), 2);
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (Eigen::Index c = 0; c < 2; ++c) r.points(i, c) = mid + (coords(i, c) - centre(c)) * scale;

  r.coverage.assign(r.cells(), 0);
  const double radius = spike_fwhm / 2.0;
  for (Eigen::Index i = 0; i < r.points.rows(); ++i) {
    const double px = r.points(i, 0), py = r.points(i, 1);
    for (int y = std::max(0, static_cast<int>(std::floor(py - radius))); y <= std::min(grid - 1, static_cast<int>(std::ceil(py + radius))); ++y)
      for (int x = std::max(0, static_cast<int>(std::floor(px - radius))); x <= std::min(grid - 1, static_cast<int>(std::ceil(px + radius))); ++x)
        if ((x - px) * (x - px) + (y - py) * (y - py) <= radius * radius)
          r.coverage[static_cast<std::size_t>(y) * static_cast<std::size_t>(grid) + static_cast<std::size_t>(x)] = 1;
  }
  return r;
}

LatentGlmResult latent_glm(const LatentRaster& raster, std::span<const double> perf, double alpha) {
  const Eigen::Index n = raster.points.rows();
  if (static_cast<Eigen::Index>(perf.size()) != n) throw Error(ErrorCode::InvalidArgument, "one perf value per patient");
  const auto z = stats::zscore(perf);
  stats::DesignMatrix design;
  design.names = {"Intercept", "Perf"};
  design.x.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(z[static_cast<std::size_t>(i)])) throw Error(ErrorCode::NonFiniteInput, "perf must be complete");
    design.x(i, 0) = 1.0;
    design.x(i, 1) = z[static_cast<std::size_t>(i)];
    design.rows.push_back(static_cast<std::size_t>(i));
  }

  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < raster.coverage.size(); ++c)
    if (raster.coverage[c]) cells.push_back(c);
  LatentGlmResult out;
  out.alpha = alpha;
  out.zmap = stats::mass_univariate_glm(raster.spike_matrix(cells), cells, raster.geometry(), design, "Perf");

  std::vector<double> pvals;
  for (std::size_t c : cells) pvals.push_back(stats::two_sided_p(out.zmap.z[c]));
  const auto fdr = stats::bh_fdr(pvals, alpha);
  out.fdr_mask.assign(raster.cells(), 0);
  for (std::size_t i = 0; i < cells.size(); ++i) out.fdr_mask[cells[i]] = fdr.significant[i] ? 1 : 0;

  const int g = raster.grid;
  out.labels.assign(raster.cells(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t seed : cells) {
    if (!out.fdr_mask[seed] || out.labels[seed]) continue;
    LatentCluster cl;
    cl.id = static_cast<int>(out.clusters.size()) + 1;
    cl.sign = out.zmap.z[seed] > 0 ? 1 : -1;
    cl.peak_z = 0.0;
    out.labels[seed] = cl.id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      cl.cells.push_back(c);
      if (std::fabs(out.zmap.z[c]) > std::fabs(cl.peak_z)) cl.peak_z = out.zmap.z[c];
      const int x = static_cast<int>(c % static_cast<std::size_t>(g)), y = static_cast<int>(c / static_cast<std::size_t>(g));
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& p : nb) {
        if (p[0] < 0 || p[0] >= g || p[1] < 0 || p[1] >= g) continue;
        const std::size_t q = static_cast<std::size_t>(p[1]) * static_cast<std::size_t>(g) + static_cast<std::size_t>(p[0]);
        if (!out.fdr_mask[q] || out.labels[q]) continue;
        if ((out.zmap.z[q] > 0 ? 1 : -1) != cl.sign) continue;
        out.labels[q] = cl.id;
        stack.push_back(q);
      }
    }
    std::sort(cl.cells.begin(), cl.cells.end());
    out.clusters.push_back(std::move(cl));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int id = out.labels[raster.cell_of(i)];
    if (id) out.clusters[static_cast<std::size_t>(id - 1)].members.push_back(i);
  }
  return out;
}

const EffectEntry* EffectProfile::strongest_demographic() const {
  const EffectEntry* best = nullptr;
  auto magnitude = [](const EffectEntry& e) {
    return e.separated ? std::numeric_limits<double>::infinity() : std::fabs(e.d);
  };
  for (const auto& e : entries) {
    if (!e.demographic || (!e.separated && !std::isfinite(e.d))) continue;
    if (!best || magnitude(e) > magnitude(*best)) best = &e;
  }
  return best;
}

EffectProfile cluster_effect_profile(const std::vector<bool>& members, const FeatureMatrix& features) {
  const Eigen::Index n = features.raw.rows();
  if (static_cast<Eigen::Index>(members.size()) != n)
    throw Error(ErrorCode::InvalidArgument, "one membership flag per patient required");
  const auto inside = static_cast<std::size_t>(std::count(members.begin(), members.end(), true));
  EffectProfile p;
  if (inside < 2) {
    p.note = "TooFewInCluster: fewer than two patients in the cluster";
    return p;
  }
  if (static_cast<std::size_t>(n) - inside < 2) {
    p.note = "TooFewInCluster: fewer than two patients outside the cluster";
    return p;
  }
  for (Eigen::Index j = 0; j < features.raw.cols(); ++j) {
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < n; ++i) (members[static_cast<std::size_t>(i)] ? a : b).push_back(features.raw(i, j));
    const double d = stats::cohens_d(a, b);
    const bool separated = !std::isfinite(d) && stats::mean(a) != stats::mean(b);
    p.entries.push_back({features.names[static_cast<std::size_t>(j)], d, separated,
                         static_cast<bool>(features.is_demographic[static_cast<std::size_t>(j)])});
  }
  return p;
}

Volume significant_overlap_map(const std::vector<bool>& members, std::span<const Volume> masks) {
  if (members.size() != masks.size()) throw Error(ErrorCode::InvalidArgument, "one membership flag per mask required");
  if (masks.empty()) throw Error(ErrorCode::EmptyInput, "no masks");
  Volume out = Volume::zeros(masks.front().dims, masks.front().spacing, Dtype::I16);
  out.affine = masks.front().affine;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!masks[i].same_grid(out)) throw Error(ErrorCode::GridMismatch, "masks on different grids");
    if (!members[i]) continue;
    for (std::size_t v = 0; v < out.size(); ++v)
      if (masks[i].data[v] != 0.0) out.data[v] += 1.0;
  }
  return out;
}

}  // namespace fairboard::repr
