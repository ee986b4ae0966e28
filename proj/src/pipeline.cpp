#include "fairboard/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <set>

#include "fairboard/cohort.hpp"
#include "fairboard/cohort_suite.hpp"
#include "fairboard/error.hpp"
#include "fairboard/features.hpp"
#include "fairboard/inequality.hpp"
#include "fairboard/latent.hpp"
#include "fairboard/league.hpp"
#include "fairboard/manifest.hpp"
#include "fairboard/metrics_table.hpp"
#include "fairboard/rng.hpp"
#include "fairboard/smoothing.hpp"
#include "fairboard/spatial_meta.hpp"
#include "fairboard/univariate.hpp"

namespace fairboard {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

fs::path require_upstream(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw Error(ErrorCode::MissingUpstream,
                path.string() + " not found; run `fairboard " + producer + "` with the same config first");
  return path;
}

std::string strip_volume_extension(const std::string& name) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0)
      return name.substr(0, name.size() - e.size());
  }
  return "";
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::vector<std::size_t> outcome_indices(const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(outcome_from_name(n));
  return out;
}

struct StageContext {
  const AnalysisConfig& config;
  StageReport report;
  Manifest manifest;

  StageContext(const AnalysisConfig& c, const std::string& stage)
      : config(c), manifest(stage, c.base_dir, c.output_path()) {
    report.stage = stage;
    manifest.set_parameters(c.parameters_json());
  }

  fs::path out(const fs::path& rel) const { return config.output_path() / rel; }

  void wrote(const fs::path& path) {
    report.outputs.push_back(path);
    manifest.add_output(path);
  }
  void csv(const fs::path& rel, const CsvTable& table) {
    write_csv(out(rel), table);
    wrote(out(rel));
  }
  void text(const fs::path& rel, const std::string& body) {
    write_text_file(out(rel), body);
    wrote(out(rel));
  }
  void volume(const fs::path& rel, const Volume& v) {
    fs::create_directories(out(rel).parent_path());
    write_volume(v, out(rel));
    wrote(out(rel));
  }
  void note(const std::string& n) {
    report.notes.push_back(n);
    manifest.add_note(n);
  }
  StageReport finish() {
    manifest.write();
    return std::move(report);
  }
};

std::vector<MetricRecord> load_metrics(StageContext& ctx) {
  const auto path = require_upstream(ctx.out(layout::kMetrics), "evaluate");
  ctx.manifest.add_input(path);
  return read_metrics(path);
}

std::vector<CohortRow> load_cohort(StageContext& ctx) {
  const auto path = ctx.config.cohort_path();
  auto rows = read_cohort(path);
  ctx.manifest.add_input(path);
  return rows;
}

// Ground-truth patients that survive exclusion and have a cohort row, sorted.
struct AnalysisSet {
  std::vector<std::string> patients;
  std::vector<CohortRow> rows;
  std::vector<fs::path> gt_paths;
};

AnalysisSet analysis_set(StageContext& ctx, const std::vector<MetricRecord>& records,
                         const std::vector<CohortRow>& cohort) {
  const auto gt_dir = ctx.config.masks_path() / layout::kGroundTruth;
  std::map<std::string, fs::path> gt;
  for (auto& [pid, path] : list_volumes(gt_dir)) gt[pid] = path;
  std::set<std::string> evaluated;
  for (const auto& r : records)
    if (!(ctx.config.exclude_oedema_only && r.gt_oedema_only)) evaluated.insert(r.patient_id);
  AnalysisSet s;
  for (const auto& [pid, path] : gt) {
    const CohortRow* row = find_patient(cohort, pid);
    if (!row || !evaluated.count(pid)) continue;
    s.patients.push_back(pid);
    s.rows.push_back(*row);
    s.gt_paths.push_back(path);
    ctx.manifest.add_input(path);
  }
  return s;
}

std::map<std::pair<std::string, std::string>, const MetricRecord*> index_records(
    const std::vector<MetricRecord>& records, bool exclude_oedema_only) {
  std::map<std::pair<std::string, std::string>, const MetricRecord*> idx;
  for (const auto& r : records)
    if (!(exclude_oedema_only && r.gt_oedema_only)) idx[{r.model_id, r.patient_id}] = &r;
  return idx;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<std::pair<std::string, fs::path>> list_volumes(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingUpstream, "volume directory not found: " + dir.string());
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto id = strip_volume_extension(e.path().filename().string());
    if (!id.empty()) out.emplace_back(id, e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

StageReport cmd_evaluate(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "evaluate");
  const auto masks = config.masks_path();
  const auto gt_dir = masks / layout::kGroundTruth;
  const auto gt_files = list_volumes(gt_dir);
  if (gt_files.empty()) throw Error(ErrorCode::MissingGroundTruth, "no ground-truth volumes in " + gt_dir.string());
  const LabelMap labels = config.label_map();
  if (config.label_map_path) ctx.manifest.add_input(config.resolve(*config.label_map_path));

  std::vector<std::string> models;
  for (const auto& e : fs::directory_iterator(masks))
    if (e.is_directory() && e.path().filename() != layout::kGroundTruth) models.push_back(e.path().filename().string());
  std::sort(models.begin(), models.end());
  if (models.empty()) throw Error(ErrorCode::MissingUpstream, "no model directories in " + masks.string());

  std::map<std::string, std::map<std::string, fs::path>> preds;
  for (const auto& m : models)
    for (auto& [pid, path] : list_volumes(masks / m)) preds[m][pid] = path;
  ctx.manifest.add_input_tree(masks);

  std::map<std::string, std::vector<MetricRecord>> rows;
  CsvTable excl;
  excl.header = {"model_id", "patient_id", "reason"};
  std::map<std::string, std::vector<std::vector<std::string>>> excl_rows;

  std::set<std::string> gt_ids;
  for (const auto& [pid, gt_path] : gt_files) {
    gt_ids.insert(pid);
    CompartmentMasks gt;
    std::string gt_error;
    try {
      gt = extract_compartments(read_volume(gt_path), labels);
    } catch (const Error& e) {
      gt_error = e.what();
    }
    for (const auto& m : models) {
      if (!gt_error.empty()) {
        excl_rows[m].push_back({m, pid, "ground truth unreadable: " + gt_error});
        continue;
      }
      if (config.exclude_oedema_only && is_oedema_only(gt)) {
        excl_rows[m].push_back({m, pid, "ground truth contains only an oedema label"});
        continue;
      }
      auto it = preds[m].find(pid);
      if (it == preds[m].end()) {
        excl_rows[m].push_back({m, pid, "missing prediction"});
        continue;
      }
      try {
        const auto pred = extract_compartments(read_volume(it->second), labels);
        CaseOptions opt;
        opt.net_supported = std::find(config.two_class_models.begin(), config.two_class_models.end(), m) ==
                            config.two_class_models.end();
        rows[m].push_back(evaluate_case(pred, gt, pid, m, opt));
      } catch (const Error& e) {
        excl_rows[m].push_back({m, pid, std::string("error: ") + e.what()});
      }
    }
    say(log, "evaluated " + pid);
  }

  std::vector<MetricRecord> all;
  for (const auto& m : models) {
    for (auto& r : rows[m]) all.push_back(std::move(r));
    for (auto& e : excl_rows[m]) excl.rows.push_back(std::move(e));
    for (const auto& [pid, path] : preds[m])
      if (!gt_ids.count(pid)) {
        excl.rows.push_back({m, pid, "MissingGroundTruth: prediction without ground truth"});
        ctx.note("prediction without ground truth: " + m + "/" + pid);
      }
  }
  ctx.csv(layout::kMetrics, metrics_to_csv(all));
  ctx.csv(layout::kExclusions, excl);
  ctx.note(std::to_string(all.size()) + " cases evaluated, " + std::to_string(excl.rows.size()) + " excluded");
  return ctx.finish();
}

StageReport cmd_univariate(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "univariate");
  const auto records = load_metrics(ctx);
  const auto cohort = load_cohort(ctx);
  const auto result = univariate::run_univariate(records, cohort, outcome_indices(config.univariate_outcomes),
                                                 config.bootstrap_iters, derive_seed(config.seed, 1),
                                                 config.exclude_oedema_only);
  ctx.csv(layout::kGaps, result.gap_table());
  ctx.csv(layout::kAgeBins, result.age_bin_table());
  say(log, "univariate: " + std::to_string(result.gaps.size()) + " gap rows");
  return ctx.finish();
}

StageReport cmd_inequality(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "inequality");
  const auto records = load_metrics(ctx);
  CsvTable t;
  t.header = {"model_id", "outcome", "n"};
  for (auto i : inequality::kIndices) t.header.emplace_back(inequality::name(i));
  for (const auto& m : model_ids(records)) {
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      std::vector<double> v;
      for (const auto& r : records)
        if (r.model_id == m && !(config.exclude_oedema_only && r.gt_oedema_only) && std::isfinite(r.values[o]))
          v.push_back(r.values[o]);
      if (config.invert_distance_inequality && !higher_is_better(outcome_metric(o)) && !v.empty()) {
        const double top = *std::max_element(v.begin(), v.end());
        for (auto& x : v) x = top - x;
      }
      std::vector<std::string> row{m, outcome_name(o), std::to_string(v.size())};
      const auto idx = inequality::all_indices(v);
      for (double x : idx) row.push_back(format_number(x));
      t.rows.push_back(std::move(row));
    }
  }
  ctx.csv(layout::kInequality, t);
  say(log, "inequality: " + std::to_string(t.rows.size()) + " rows");
  return ctx.finish();
}

StageReport cmd_league(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "league");
  const auto records = load_metrics(ctx);
  const auto ineq_path = require_upstream(ctx.out(layout::kInequality), "inequality");
  ctx.manifest.add_input(ineq_path);
  const auto ineq = read_csv(ineq_path);

  const auto means = league::model_outcome_means(records, config.exclude_oedema_only);
  std::vector<league::InequalityRow> cells(means.models.size());
  for (auto& c : cells) c.fill(kMissing);
  const auto c_model = ineq.require_column("model_id"), c_outcome = ineq.require_column("outcome");
  std::vector<std::size_t> c_index;
  for (auto i : inequality::kIndices) c_index.push_back(ineq.require_column(inequality::name(i)));
  for (const auto& row : ineq.rows) {
    const auto it = std::find(means.models.begin(), means.models.end(), row[c_model]);
    if (it == means.models.end()) continue;
    const auto m = static_cast<std::size_t>(it - means.models.begin());
    const std::size_t o = outcome_from_name(row[c_outcome]);
    for (std::size_t i = 0; i < c_index.size(); ++i) cells[m][i * kOutcomeCount + o] = parse_number(row[c_index[i]]);
  }
  const auto perf = league::performance_scores(means.means);
  const auto equity = league::equity_scores(cells);
  const auto table = league::composite_table(means.models, perf, equity, config.scenarios);
  ctx.csv(layout::kLeagueCsv, table.to_csv());
  ctx.text(layout::kLeagueJson, table.to_json() + "\n");
  say(log, "league: " + std::to_string(table.entries.size()) + " models");
  return ctx.finish();
}

StageReport cmd_cohort(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "cohort");
  const auto records = load_metrics(ctx);
  const auto cohort = load_cohort(ctx);
  lme::CohortSuiteOptions opt;
  opt.exclude_oedema_only = config.exclude_oedema_only;
  opt.alpha = config.alpha;
  const auto result = lme::run_cohort_suite(records, cohort, opt);
  ctx.csv(layout::kCoefficients, result.coefficient_table());
  ctx.csv(layout::kVariance, result.variance_table());
  for (const auto& f : result.fits) {
    if (!f.error.empty()) ctx.note(f.dv + ": " + f.error);
    else if (!f.fit->converged) ctx.note(f.dv + ": optimizer did not meet the convergence tolerance");
  }
  say(log, "cohort: " + std::to_string(result.fits.size()) + " outcome fits");
  return ctx.finish();
}

StageReport cmd_spatial(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "spatial");
  const auto records = load_metrics(ctx);
  const auto cohort = load_cohort(ctx);
  const auto set = analysis_set(ctx, records, cohort);
  const auto models = model_ids(records);
  const auto by_key = index_records(records, config.exclude_oedema_only);
  const LabelMap labels = config.label_map();
  if (set.patients.size() < 3) throw Error(ErrorCode::TooFewValues, "spatial analysis needs at least three patients");

  std::vector<CompartmentMasks> gt;
  for (const auto& p : set.gt_paths) gt.push_back(extract_compartments(read_volume(p), labels));
  std::map<Compartment, std::vector<Volume>> smoothed;
  auto images_for = [&](Compartment c) -> const std::vector<Volume>& {
    auto it = smoothed.find(c);
    if (it != smoothed.end()) return it->second;
    std::vector<Volume> imgs;
    for (const auto& g : gt) imgs.push_back(stats::gaussian_smooth(g[static_cast<std::size_t>(c)].volume, config.fwhm_mm));
    return smoothed.emplace(c, std::move(imgs)).first->second;
  };

  for (const auto& outcome : config.spatial_outcomes) {
    const std::size_t o = outcome_from_name(outcome);
    const auto& images = images_for(outcome_compartment(o));
    const fs::path dir = fs::path(layout::kSpatial) / outcome;

    std::vector<stats::ZMap> maps;
    std::vector<std::string> used;
    json errors = json::object();
    for (const auto& m : models) {
      std::vector<double> perf(set.patients.size(), kMissing);
      for (std::size_t i = 0; i < set.patients.size(); ++i)
        if (auto it = by_key.find({m, set.patients[i]}); it != by_key.end()) perf[i] = it->second->values[o];
      try {
        maps.push_back(spatial::per_model_spatial_glm(images, perf, set.rows));
        used.push_back(m);
        ctx.volume(dir / ("z_" + m + ".nii.gz"), maps.back().to_volume());
      } catch (const Error& e) {
        errors[m] = e.what();
      }
    }

    json summary;
    summary["outcome"] = outcome;
    summary["fwhm_mm"] = config.fwhm_mm;
    summary["alpha"] = config.alpha;
    summary["n_patients"] = set.patients.size();
    summary["models"] = used;
    summary["errors"] = errors;
    if (maps.size() >= 2) {
      const auto meta = spatial::dersimonian_laird(maps, config.alpha);
      const auto perm = spatial::sign_flip_permutation(maps, config.n_perm, derive_seed(config.seed, 100 + o));
      const auto het = spatial::heterogeneity_summary(meta);
      ctx.volume(dir / "pooled_z.nii.gz", meta.pooled_z.to_volume());
      ctx.volume(dir / "analysis_mask.nii.gz", meta.pooled_z.mask_volume());
      ctx.volume(dir / "tau2.nii.gz", meta.tau2_volume());
      ctx.volume(dir / "i2.nii.gz", meta.i2_volume());
      ctx.volume(dir / "fdr_mask.nii.gz", meta.fdr_volume());
      ctx.volume(dir / "prevalence.nii.gz", spatial::prevalence_map(maps, config.alpha));
      std::size_t n_sig = 0, n_pos = 0;
      for (std::size_t v = 0; v < meta.fdr_mask.size(); ++v)
        if (meta.fdr_mask[v]) {
          ++n_sig;
          n_pos += meta.pooled_z.z[v] > 0;
        }
      summary["fdr"] = {{"n_voxels", meta.pooled_z.mask_count()},
                        {"n_significant", n_sig},
                        {"n_positive", n_pos},
                        {"threshold", number_or_null(meta.fdr_threshold)}};
      summary["permutation"] = {{"n_perm", perm.n_perm},
                                {"observed_max_abs_z", perm.observed_max},
                                {"null_p95", perm.null_p95},
                                {"fwe_p", perm.fwe_p}};
      summary["heterogeneity"] = {{"median_i2", het.median_all},
                                  {"fraction_nonzero", het.fraction_nonzero},
                                  {"median_i2_nonzero", number_or_null(het.median_nonzero)},
                                  {"q1_i2_nonzero", number_or_null(het.q1_nonzero)},
                                  {"q3_i2_nonzero", number_or_null(het.q3_nonzero)}};
    } else {
      summary["meta_error"] = "TooFewStudies: fewer than two model maps";
      ctx.note(outcome + ": fewer than two model maps");
    }
    fs::create_directories(ctx.out(dir));
    write_json(ctx.out(dir / "summary.json"), summary);
    ctx.wrote(ctx.out(dir / "summary.json"));
    say(log, "spatial: " + outcome + " pooled over " + std::to_string(maps.size()) + " models");
  }
  return ctx.finish();
}

namespace {

repr::FeatureMatrix subset_rows(const repr::FeatureMatrix& fm, const std::vector<Eigen::Index>& rows) {
  repr::FeatureMatrix s = fm;
  s.patient_ids.clear();
  s.values.resize(static_cast<Eigen::Index>(rows.size()), fm.values.cols());
  s.raw.resize(static_cast<Eigen::Index>(rows.size()), fm.raw.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    s.patient_ids.push_back(fm.patient_ids[static_cast<std::size_t>(rows[k])]);
    s.values.row(static_cast<Eigen::Index>(k)) = fm.values.row(rows[k]);
    s.raw.row(static_cast<Eigen::Index>(k)) = fm.raw.row(rows[k]);
  }
  return s;
}

}  // namespace

StageReport cmd_representational(const AnalysisConfig& config, const Logger& log) {
  StageContext ctx(config, "representational");
  const auto records = load_metrics(ctx);
  const auto cohort = load_cohort(ctx);
  const auto set = analysis_set(ctx, records, cohort);
  const auto models = model_ids(records);
  const auto by_key = index_records(records, config.exclude_oedema_only);
  const LabelMap labels = config.label_map();
  const fs::path root = layout::kRepresentational;

  std::vector<repr::SparseImage> images;
  std::map<std::string, Volume> wt;
  for (std::size_t i = 0; i < set.patients.size(); ++i) {
    const auto masks = extract_compartments(read_volume(set.gt_paths[i]), labels);
    images.push_back(repr::lesion_channels(masks));
    wt.emplace(set.patients[i], masks[static_cast<std::size_t>(Compartment::WT)].volume);
  }
  const std::size_t dimension = 3 * static_cast<std::size_t>(repr::kMaskGrid) * repr::kMaskGrid * repr::kMaskGrid;
  const auto fm = repr::build_feature_matrix(set.patients, images, dimension, cohort);
  const Eigen::MatrixXd coords = repr::embed_2d(fm.values, config.embedding);

  CsvTable coords_csv;
  coords_csv.header = {"patient_id", "x", "y"};
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    coords_csv.rows.push_back({fm.patient_ids[static_cast<std::size_t>(i)], format_number(coords(i, 0)),
                               format_number(coords(i, 1))});
  ctx.csv(root / "coords.csv", coords_csv);

  CsvTable feat_csv;
  feat_csv.header = {"patient_id"};
  for (const auto& n : fm.names) feat_csv.header.push_back(n);
  for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
    std::vector<std::string> row{fm.patient_ids[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < fm.values.cols(); ++j) row.push_back(format_number(fm.values(i, j)));
    feat_csv.rows.push_back(std::move(row));
  }
  ctx.csv(root / "features.csv", feat_csv);

  json run;
  run["embedding"] = {{"method", config.embedding.method == repr::EmbedMethod::Umap ? "umap" : "pca"},
                      {"n_neighbors", config.embedding.n_neighbors},
                      {"min_dist", config.embedding.min_dist},
                      {"metric", config.embedding.metric},
                      {"seed", config.embedding.seed}};
  run["pca"] = {{"k", fm.pca.k},
                {"cap", repr::kPcaCap},
                {"target", repr::kPcaTarget},
                {"cumulative_explained", fm.pca.cumulative},
                {"explained", fm.pca.explained}};
  run["feature_names"] = fm.names;
  run["dropped_constant"] = fm.dropped_constant;
  run["excluded_patients"] = fm.excluded;
  run["grid"] = repr::kLatentGrid;
  run["spike_fwhm"] = repr::kSpikeFwhm;
  fs::create_directories(ctx.out(root));
  write_json(ctx.out(root / "run_config.json"), run);
  ctx.wrote(ctx.out(root / "run_config.json"));
  ctx.note("PCA kept " + std::to_string(fm.pca.k) + " components");

  for (const auto& outcome : config.representational_outcomes) {
    const std::size_t o = outcome_from_name(outcome);
    const fs::path dir = root / outcome;
    std::vector<Eigen::Index> rows;
    std::vector<double> perf;
    for (std::size_t i = 0; i < fm.patient_ids.size(); ++i) {
      double sum = 0.0;
      int n = 0;
      for (const auto& m : models)
        if (auto it = by_key.find({m, fm.patient_ids[i]}); it != by_key.end() && std::isfinite(it->second->values[o])) {
          sum += it->second->values[o];
          ++n;
        }
      if (n == 0) continue;
      rows.push_back(static_cast<Eigen::Index>(i));
      perf.push_back(sum / n);
    }
    json summary;
    summary["outcome"] = outcome;
    summary["alpha"] = config.alpha;
    summary["n_patients"] = rows.size();
    fs::create_directories(ctx.out(dir));

    try {
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), 2);
      for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = coords.row(rows[k]);
      const auto raster = repr::rasterize_latent(sub);
      const auto glm = repr::latent_glm(raster, perf, config.alpha);
      const auto sub_fm = subset_rows(fm, rows);

      ctx.volume(dir / "zmap.nii.gz", glm.zmap.to_volume());
      ctx.volume(dir / "coverage.nii.gz", glm.zmap.mask_volume());
      Volume fdr = raster.geometry();
      fdr.dtype_tag = Dtype::U8;
      for (std::size_t c = 0; c < fdr.size(); ++c) fdr.data[c] = glm.fdr_mask[c];
      ctx.volume(dir / "fdr_mask.nii.gz", fdr);

      CsvTable pts;
      pts.header = {"patient_id", "perf", "grid_x", "grid_y", "cluster"};
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        pts.rows.push_back({sub_fm.patient_ids[k], format_number(perf[k]), format_number(raster.points(i, 0)),
                            format_number(raster.points(i, 1)), std::to_string(glm.labels[raster.cell_of(i)])});
      }
      ctx.csv(dir / "points.csv", pts);

      CsvTable clusters, effects;
      clusters.header = {"cluster", "sign", "n_cells", "peak_z", "n_members"};
      effects.header = {"cluster", "feature", "demographic", "cohens_d", "separated", "note"};
      json cl_json = json::array();
      for (const auto& cl : glm.clusters) {
        clusters.rows.push_back({std::to_string(cl.id), std::to_string(cl.sign), std::to_string(cl.cells.size()),
                                 format_number(cl.peak_z), std::to_string(cl.members.size())});
        std::vector<bool> member(rows.size(), false);
        for (auto i : cl.members) member[static_cast<std::size_t>(i)] = true;
        const auto profile = repr::cluster_effect_profile(member, sub_fm);
        if (!profile.note.empty()) effects.rows.push_back({std::to_string(cl.id), "", "", "", "", profile.note});
        for (const auto& e : profile.entries)
          effects.rows.push_back({std::to_string(cl.id), e.feature, e.demographic ? "1" : "0", format_number(e.d),
                                  e.separated ? "1" : "0", ""});
        if (!cl.members.empty()) {
          std::vector<Volume> member_masks;
          std::vector<bool> flags;
          for (std::size_t k = 0; k < rows.size(); ++k) {
            member_masks.push_back(wt.at(sub_fm.patient_ids[k]));
            flags.push_back(member[k]);
          }
          try {
            ctx.volume(dir / ("overlap_cluster" + std::to_string(cl.id) + ".nii.gz"),
                       repr::significant_overlap_map(flags, member_masks));
          } catch (const Error& e) {
            ctx.note(outcome + " cluster " + std::to_string(cl.id) + ": " + e.what());
          }
        }
        cl_json.push_back({{"id", cl.id}, {"sign", cl.sign}, {"n_cells", cl.cells.size()}, {"peak_z", cl.peak_z}});
      }
      ctx.csv(dir / "clusters.csv", clusters);
      ctx.csv(dir / "effect_profile.csv", effects);
      std::size_t n_sig = 0;
      for (auto b : glm.fdr_mask) n_sig += b;
      summary["covered_cells"] = glm.zmap.mask_count();
      summary["n_significant_cells"] = n_sig;
      summary["clusters"] = cl_json;
    } catch (const Error& e) {
      summary["error"] = e.what();
      ctx.note(outcome + ": " + e.what());
    }
    write_json(ctx.out(dir / "summary.json"), summary);
    ctx.wrote(ctx.out(dir / "summary.json"));
    say(log, "representational: " + outcome);
  }
  return ctx.finish();
}

std::vector<StageReport> cmd_all(const AnalysisConfig& config, const Logger& log) {
  std::vector<StageReport> out;
  out.push_back(cmd_evaluate(config, log));
  out.push_back(cmd_univariate(config, log));
  out.push_back(cmd_inequality(config, log));
  out.push_back(cmd_league(config, log));
  out.push_back(cmd_cohort(config, log));
  out.push_back(cmd_spatial(config, log));
  out.push_back(cmd_representational(config, log));
  return out;
}

}  // namespace fairboard
