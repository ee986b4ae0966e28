#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fairboard/compartments.hpp"
#include "fairboard/embedding.hpp"
#include "fairboard/features.hpp"
#include "fairboard/latent.hpp"
#include "fairboard/rng.hpp"

namespace fbtest {

// Three lesion populations: left lesions with high performance, deep biopsy
// lesions with low performance, right lesions in between.
struct PlantedRepr {
  std::vector<std::string> ids;
  std::vector<fairboard::CohortRow> cohort;
  std::vector<int> group;
  std::vector<double> perf;
  fairboard::repr::FeatureMatrix features;
};

inline fairboard::Volume ellipsoid_labels(fairboard::Rng& rng, std::array<double, 3> c, double r, bool biopsy) {
  using namespace fairboard;
  Volume v = Volume::zeros({32, 32, 32}, {4, 4, 4}, Dtype::U8);
  for (auto& x : c) x += rng.normal(0, 1.2);
  r *= 1.0 + rng.normal(0, 0.1);
  for (int z = 0; z < 32; ++z)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const double d = std::sqrt((x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) + 1.5 * (z - c[2]) * (z - c[2]));
        if (d < r * (biopsy ? 0.6 : 0.35)) v.at(x, y, z) = 1;
        else if (!biopsy && d < 0.6 * r) v.at(x, y, z) = 4;
        else if (d < r) v.at(x, y, z) = 2;
      }
  return v;
}

inline PlantedRepr make_planted_repr(std::uint64_t seed, int per_group = 40) {
  using namespace fairboard;
  PlantedRepr p;
  Rng rng(seed);
  std::vector<repr::SparseImage> images;
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < per_group; ++i) {
      CohortRow r;
      r.patient_id = "R" + std::to_string(g) + "_" + std::to_string(i);
      r.sex = rng.uniform() < 0.55 ? "M" : "F";
      r.age_years = std::round(rng.normal(58, 12));
      r.source = rng.uniform() < 0.7 ? "UCSF-PDGM" : "UPENN-GBM";
      r.who_grade = 4;
      r.diagnosis = kGbmDiagnosis;
      r.idh = "wildtype";
      r.resection = g == 1 ? "Biopsy" : (rng.uniform() < 0.6 ? "GTR" : "STR");
      const std::array<double, 3> centre = g == 0 ? std::array<double, 3>{9, 14, 16}
                                           : g == 1 ? std::array<double, 3>{16, 18, 13}
                                                    : std::array<double, 3>{23, 14, 16};
      const auto labels = ellipsoid_labels(rng, centre, g == 1 ? 7.0 : 5.0, g == 1);
      images.push_back(repr::lesion_channels(extract_compartments(labels)));
      p.ids.push_back(r.patient_id);
      p.cohort.push_back(r);
      p.group.push_back(g);
      p.perf.push_back((g == 0 ? 0.88 : g == 1 ? 0.45 : 0.7) + rng.normal(0, 0.05));
    }
  const std::size_t dim = 3 * static_cast<std::size_t>(repr::kMaskGrid) * repr::kMaskGrid * repr::kMaskGrid;
  p.features = repr::build_feature_matrix(p.ids, images, dim, p.cohort);
  return p;
}

struct PlantedOutcome {
  bool positive = false;
  bool negative = false;
  std::string negative_top_demographic;
};

inline PlantedOutcome analyse_planted(const PlantedRepr& p, int n_neighbors, double min_dist, std::uint64_t seed = 42) {
  using namespace fairboard;
  repr::EmbedParams params;
  params.n_neighbors = n_neighbors;
  params.min_dist = min_dist;
  params.seed = seed;
  const auto coords = repr::embed_2d(p.features.values, params);
  const auto raster = repr::rasterize_latent(coords);
  const auto glm = repr::latent_glm(raster, p.perf);
  PlantedOutcome out;
  const repr::LatentCluster* biggest_negative = nullptr;
  for (const auto& c : glm.clusters) {
    if (c.sign > 0) out.positive = true;
    if (c.sign < 0) {
      out.negative = true;
      if (!biggest_negative || c.members.size() > biggest_negative->members.size()) biggest_negative = &c;
    }
  }
  if (biggest_negative) {
    std::vector<bool> members(p.ids.size(), false);
    for (auto m : biggest_negative->members) members[static_cast<std::size_t>(m)] = true;
    const auto profile = repr::cluster_effect_profile(members, p.features);
    if (const auto* top = profile.strongest_demographic()) out.negative_top_demographic = top->feature;
  }
  return out;
}

}  // namespace fbtest
