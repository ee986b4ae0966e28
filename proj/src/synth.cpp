#include "fairboard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "fairboard/cohort.hpp"
#include "fairboard/csv.hpp"
#include "fairboard/rng.hpp"
#include "fairboard/volume.hpp"

namespace fairboard {

namespace {

namespace fs = std::filesystem;

struct Lesion {
  std::array<double, 3> centre;
  std::array<double, 3> axis_scale;
  double core;      // outer radius of the enhancing rim
  double rim;       // rim thickness; 0 means no enhancing tumour
  double oedema;    // extent of oedema beyond the core
  bool oedema_only;
};

enum Label : int { kNet = 1, kOed = 2, kEt = 4 };

Volume paint(const Lesion& l, const SynthOptions& o, bool single_core_label) {
  Volume v = Volume::zeros(o.dims, {o.spacing_mm, o.spacing_mm, o.spacing_mm}, Dtype::U8);
  for (int z = 0; z < o.dims[2]; ++z)
    for (int y = 0; y < o.dims[1]; ++y)
      for (int x = 0; x < o.dims[0]; ++x) {
        const double dx = (x - l.centre[0]) / l.axis_scale[0], dy = (y - l.centre[1]) / l.axis_scale[1],
                     dz = (z - l.centre[2]) / l.axis_scale[2];
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        int label = 0;
        if (l.oedema_only) {
          if (d < l.core + l.oedema) label = kOed;
        } else if (d < l.core - l.rim) {
          label = single_core_label ? kEt : kNet;
        } else if (d < l.core) {
          label = l.rim > 0.0 || single_core_label ? kEt : kNet;
        } else if (d < l.core + l.oedema) {
          label = kOed;
        }
        v.at(x, y, z) = label;
      }
  return v;
}

}  // namespace

void write_synthetic_study(const fs::path& dir, const SynthOptions& o) {
  fs::create_directories(dir / "masks" / "ground_truth");
  for (const auto& m : o.models) fs::create_directories(dir / "masks" / m);

  std::vector<CohortRow> cohort;
  const std::array<double, 3> mid{(o.dims[0] - 1) / 2.0, (o.dims[1] - 1) / 2.0, (o.dims[2] - 1) / 2.0};
  for (int i = 0; i < o.n_patients; ++i) {
    Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(i)));
    CohortRow r;
    char id[16];
    std::snprintf(id, sizeof id, "SYN-%03d", i + 1);
    r.patient_id = id;
    r.sex = rng.uniform() < 0.6 ? "M" : "F";
    r.source = rng.uniform() < 0.7 ? "UCSF-PDGM" : "UPENN-GBM";
    const double u = rng.uniform();
    const bool gbm = r.source == "UPENN-GBM" || u < 0.72;
    r.who_grade = gbm ? 4 : 2 + static_cast<int>(rng.index(3));
    r.diagnosis = gbm ? kGbmDiagnosis : "Astrocytoma, IDH-mutant";
    r.idh = gbm ? "wildtype" : "mutant";
    r.age_years = std::round(std::clamp(rng.normal(gbm ? 62.0 : 42.0, 12.0), 18.0, 92.0));
    const double v = rng.uniform();
    r.resection = v < 0.55 ? "GTR" : (v < 0.85 ? "STR" : "Biopsy");
    r.survival_days = std::round(std::exp(rng.normal(5.9, 0.6)));
    if (i == 7) r.resection.clear();
    if (i == 11) r.survival_days.reset();

    const bool biopsy = r.resection == "Biopsy";
    const bool left = rng.coin();
    Lesion l;
    // Biopsied lesions sit deep and near the midline.
    const double lateral = biopsy ? 2.0 + 2.0 * rng.uniform() : 5.0 + 5.0 * rng.uniform();
    l.centre = {mid[0] + (left ? -lateral : lateral), mid[1] + (biopsy ? 4.0 : 10.0) * (2.0 * rng.uniform() - 1.0),
                mid[2] + (biopsy ? 2.0 : 6.0) * (2.0 * rng.uniform() - 1.0)};
    l.axis_scale = {0.85 + 0.3 * rng.uniform(), 0.85 + 0.3 * rng.uniform(), 0.85 + 0.3 * rng.uniform()};
    l.core = (biopsy ? 3.2 : 2.0) + 1.5 * rng.uniform();
    l.rim = *r.who_grade == 4 ? 1.2 : 0.0;
    l.oedema = 1.5 + 2.0 * rng.uniform();
    l.oedema_only = i >= o.n_patients - o.n_oedema_only;
    cohort.push_back(r);

    const Volume gt = paint(l, o, false);
    write_volume(gt, dir / "masks" / "ground_truth" / (r.patient_id + ".nii.gz"));

    const double difficulty = 1.0 + (biopsy ? 0.9 : 0.0) + (r.resection == "STR" ? 0.4 : 0.0) +
                              (*r.who_grade != 4 ? 0.4 : 0.0) + 0.3 * std::fabs(rng.normal());
    for (std::size_t m = 0; m < o.models.size(); ++m) {
      Rng mr(derive_seed(o.seed, 1000 + static_cast<std::uint64_t>(i) * 16 + m));
      const double scale = (0.45 + 0.3 * static_cast<double>(m)) * difficulty;
      Lesion p = l;
      for (auto& c : p.centre) c += mr.normal(0.0, 0.35 * scale);
      p.core = std::max(0.8, l.core * (1.0 + mr.normal(0.0, 0.12 * scale)));
      p.rim = l.rim > 0.0 ? std::max(0.6, l.rim * (1.0 + mr.normal(0.0, 0.2 * scale))) : 0.0;
      p.oedema = std::max(0.5, l.oedema * (1.0 + mr.normal(0.0, 0.2 * scale)));
      const Volume pred = paint(p, o, o.models[m] == o.two_class_model);
      write_volume(pred, dir / "masks" / o.models[m] / (r.patient_id + ".nii.gz"));
    }
  }
  write_csv(dir / "cohort.csv", cohort_to_csv(cohort));

  nlohmann::ordered_json cfg;
  cfg["cohort_csv"] = "cohort.csv";
  cfg["masks_dir"] = "masks";
  cfg["output_dir"] = "out";
  cfg["seed"] = o.seed;
  cfg["two_class_models"] = std::vector<std::string>{o.two_class_model};
  write_text_file(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace fairboard
