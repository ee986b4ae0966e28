#include "fairboard/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <httplib.h>
#include <json.hpp>
#include <set>

#include "fairboard/cohort.hpp"
#include "fairboard/error.hpp"
#include "fairboard/league.hpp"
#include "fairboard/manifest.hpp"
#include "fairboard/metrics_table.hpp"
#include "fairboard/pipeline.hpp"
#include "fairboard/stats.hpp"
#include "fairboard/univariate.hpp"
#include "fairboard/volume.hpp"

namespace fairboard {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct HttpError {
  int status;
  std::string message;
};

[[noreturn]] void fail(int status, const std::string& message) { throw HttpError{status, message}; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cell_value(const std::string& cell) {
  if (cell.empty()) return nullptr;
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec == std::errc() && ptr == end) return number_or_null(v);
  return cell;
}

json csv_records(const CsvTable& t) {
  json out = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t c = 0; c < t.header.size(); ++c) r[t.header[c]] = c < row.size() ? cell_value(row[c]) : json();
    out.push_back(std::move(r));
  }
  return out;
}

fs::path artifact(const AnalysisConfig& config, const fs::path& rel, const std::string& producer) {
  const auto p = config.output_path() / rel;
  if (!fs::exists(p)) fail(404, rel.string() + " has not been produced; run `fairboard " + producer + "`");
  return p;
}

std::optional<std::string> param(const QueryParams& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

double parse_param(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    fail(422, "parameter " + key + " must be a finite number");
  return v;
}

double checked_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(422, "alpha must lie in (0, 1]");
  return alpha;
}

std::size_t checked_outcome(const std::string& name) {
  try {
    return outcome_from_name(name);
  } catch (const Error&) {
    fail(422, "unknown outcome " + name);
  }
}

void reject_unknown(const QueryParams& params, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : params)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      fail(422, "unknown parameter " + k);
}

json counts_of(const std::vector<CohortRow>& rows, const std::function<std::string(const CohortRow&)>& key) {
  std::map<std::string, int> counts;
  for (const auto& r : rows) {
    const auto k = key(r);
    ++counts[k.empty() ? "missing" : k];
  }
  json out = json::object();
  for (const auto& [k, n] : counts) out[k] = n;
  return out;
}

json numeric_summary(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return {{"n", 0}};
  return {{"n", v.size()},
          {"mean", stats::mean(v)},
          {"median", stats::median(v)},
          {"min", *std::min_element(v.begin(), v.end())},
          {"max", *std::max_element(v.begin(), v.end())}};
}

json get_cohort(const AnalysisConfig& config) {
  if (!fs::exists(config.cohort_path())) fail(404, "cohort table not found");
  const auto rows = read_cohort(config.cohort_path());
  std::vector<double> ages, survival;
  json patients = json::array();
  for (const auto& r : rows) {
    ages.push_back(r.age_years.value_or(kMissing));
    survival.push_back(r.survival_days.value_or(kMissing));
    const auto str = [](const std::string& s) { return s.empty() ? json(nullptr) : json(s); };
    patients.push_back({{"patient_id", r.patient_id},
                        {"sex", str(r.sex)},
                        {"age_years", r.age_years ? json(*r.age_years) : json()},
                        {"source", str(r.source)},
                        {"who_grade", r.who_grade ? json(*r.who_grade) : json()},
                        {"resection", str(r.resection)},
                        {"diagnosis", str(r.diagnosis)},
                        {"idh", str(r.idh)},
                        {"survival_days", r.survival_days ? json(*r.survival_days) : json()}});
  }
  json out;
  out["n_patients"] = rows.size();
  out["counts"] = {
      {"sex", counts_of(rows, [](const CohortRow& r) { return r.sex; })},
      {"source", counts_of(rows, [](const CohortRow& r) { return r.source; })},
      {"who_grade", counts_of(rows, [](const CohortRow& r) { return r.who_grade ? std::to_string(*r.who_grade) : ""; })},
      {"resection", counts_of(rows, [](const CohortRow& r) { return r.resection; })},
      {"diagnosis", counts_of(rows, [](const CohortRow& r) { return diagnosis_class(r).value_or(""); })},
      {"idh", counts_of(rows, [](const CohortRow& r) { return r.idh; })}};
  out["age_years"] = numeric_summary(ages);
  out["survival_days"] = numeric_summary(survival);
  out["patients"] = patients;
  return out;
}

json get_metrics(const AnalysisConfig& config, const QueryParams& params) {
  reject_unknown(params, {"model", "outcome"});
  const auto model = param(params, "model");
  const auto outcome = param(params, "outcome");
  std::vector<std::size_t> outcomes;
  if (outcome) outcomes.push_back(checked_outcome(*outcome));
  else
    for (std::size_t o = 0; o < kOutcomeCount; ++o) outcomes.push_back(o);

  const auto records = read_metrics(artifact(config, layout::kMetrics, "evaluate"));
  const auto models = model_ids(records);
  if (model && std::find(models.begin(), models.end(), *model) == models.end()) fail(404, "unknown model " + *model);

  const auto means = league::model_outcome_means(records, config.exclude_oedema_only);
  json mean_json = json::object();
  for (std::size_t m = 0; m < means.models.size(); ++m) {
    if (model && means.models[m] != *model) continue;
    json row = json::object();
    for (auto o : outcomes) row[outcome_name(o)] = number_or_null(means.means[m][o]);
    mean_json[means.models[m]] = row;
  }
  json recs = json::array();
  for (const auto& r : records) {
    if (model && r.model_id != *model) continue;
    json values = json::object();
    for (auto o : outcomes) values[outcome_name(o)] = number_or_null(r.values[o]);
    recs.push_back({{"patient_id", r.patient_id},
                    {"model_id", r.model_id},
                    {"gt_oedema_only", r.gt_oedema_only},
                    {"values", values}});
  }
  json out;
  out["models"] = models;
  json names = json::array();
  for (auto o : outcomes) names.push_back(outcome_name(o));
  out["outcomes"] = names;
  out["means"] = mean_json;
  out["records"] = recs;
  return out;
}

// Stored performance and equity scores of league.json.
struct StoredLeague {
  json doc;
  std::vector<std::string> models;
  std::vector<double> perf;
  std::vector<double> equity;
};

StoredLeague load_league(const AnalysisConfig& config) {
  StoredLeague s;
  s.doc = json::parse(read_text_file(artifact(config, layout::kLeagueJson, "league")));
  for (const auto& m : s.doc.at("models")) {
    s.models.push_back(m.at("model_id").get<std::string>());
    s.perf.push_back(m.at("perf_score").get<double>());
    s.equity.push_back(m.at("equity_score").get<double>());
  }
  return s;
}

std::optional<league::Scenario> weights_from(std::optional<double> wp, std::optional<double> we) {
  if (!wp && !we) return std::nullopt;
  league::Scenario s{wp ? *wp : 1.0 - *we, we ? *we : 1.0 - *wp};
  try {
    league::validate(s);
  } catch (const Error& e) {
    fail(422, e.what());
  }
  return s;
}

json league_for(const StoredLeague& stored, const league::Scenario& s) {
  const auto table = league::composite_table(stored.models, stored.perf, stored.equity, {s});
  json out = json::parse(table.to_json());
  out["weights"] = {{"wp", s.wp}, {"we", s.we}};
  return out;
}

json get_league(const AnalysisConfig& config, const QueryParams& params) {
  reject_unknown(params, {"wp", "we"});
  std::optional<double> wp, we;
  if (auto v = param(params, "wp")) wp = parse_param("wp", *v);
  if (auto v = param(params, "we")) we = parse_param("we", *v);
  const auto s = weights_from(wp, we);
  const auto stored = load_league(config);
  if (!s) return stored.doc;
  return league_for(stored, *s);
}

json get_univariate(const AnalysisConfig& config, const QueryParams& params) {
  reject_unknown(params, {"factor", "metric"});
  const auto factor = param(params, "factor");
  const auto metric = param(params, "metric");
  if (metric) checked_outcome(*metric);
  std::set<std::string> factors{"age"};
  for (const auto& f : univariate::binary_factors()) factors.insert(f.name);
  if (factor && !factors.count(*factor)) fail(422, "unknown factor " + *factor);

  const bool age = factor && *factor == "age";
  const auto table = age ? read_csv(artifact(config, layout::kAgeBins, "univariate"))
                         : read_csv(artifact(config, layout::kGaps, "univariate"));
  CsvTable filtered{table.header, {}};
  const auto c_outcome = table.require_column("outcome");
  const auto c_factor = table.column("factor");
  for (const auto& row : table.rows) {
    if (metric && row[c_outcome] != *metric) continue;
    if (factor && !age && row[*c_factor] != *factor) continue;
    filtered.rows.push_back(row);
  }
  json out;
  out["factor"] = factor ? json(*factor) : json();
  out["metric"] = metric ? json(*metric) : json();
  out["factors"] = factors;
  out["kind"] = age ? "age_bins" : "gaps";
  out["rows"] = csv_records(filtered);
  return out;
}

// BH over the in-mask voxels of a stored z volume.
stats::FdrResult threshold_map(const Volume& z, const Volume& mask, double alpha, std::vector<std::size_t>& voxels) {
  std::vector<double> p;
  voxels.clear();
  for (std::size_t v = 0; v < z.size(); ++v)
    if (mask.data[v] != 0.0) {
      voxels.push_back(v);
      p.push_back(stats::two_sided_p(z.data[v]));
    }
  return stats::bh_fdr(p, alpha);
}

json slice_of(const Volume& v, int axis, int index, const std::function<json(std::size_t)>& cell) {
  // Rows run along the slower of the two remaining axes.
  const int a = axis == 0 ? 1 : 0;
  const int b = axis == 2 ? 1 : 2;
  json rows = json::array();
  for (int j = 0; j < v.dims[b]; ++j) {
    json row = json::array();
    for (int i = 0; i < v.dims[a]; ++i) {
      std::array<int, 3> c{};
      c[axis] = index;
      c[a] = i;
      c[b] = j;
      row.push_back(cell(v.index(c[0], c[1], c[2])));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json get_spatial(const AnalysisConfig& config, const std::string& compartment, const std::string& metric,
                 const QueryParams& params) {
  reject_unknown(params, {"alpha", "axis", "slice"});
  const std::string outcome = compartment + "_" + metric;
  checked_outcome(outcome);
  const double alpha = checked_alpha(param(params, "alpha") ? parse_param("alpha", *param(params, "alpha")) : config.alpha);
  const std::string axis_name = param(params, "axis").value_or("z");
  if (axis_name != "x" && axis_name != "y" && axis_name != "z") fail(422, "axis must be x, y or z");
  const int axis = axis_name[0] - 'x';

  const fs::path dir = fs::path(layout::kSpatial) / outcome;
  if (!fs::is_directory(config.output_path() / dir)) fail(404, "no spatial results for " + outcome);
  const json summary = json::parse(read_text_file(artifact(config, dir / "summary.json", "spatial")));
  json out;
  out["outcome"] = outcome;
  out["alpha"] = alpha;
  out["summary"] = summary;
  if (!fs::exists(config.output_path() / dir / "pooled_z.nii.gz")) {
    out["slices"] = nullptr;
    return out;
  }
  const Volume z = read_volume(config.output_path() / dir / "pooled_z.nii.gz");
  const Volume mask = read_volume(config.output_path() / dir / "analysis_mask.nii.gz");
  const Volume i2 = read_volume(config.output_path() / dir / "i2.nii.gz");
  const Volume prevalence = read_volume(config.output_path() / dir / "prevalence.nii.gz");
  const int slice = param(params, "slice") ? static_cast<int>(parse_param("slice", *param(params, "slice")))
                                           : z.dims[axis] / 2;
  if (slice < 0 || slice >= z.dims[axis]) fail(422, "slice out of range");

  std::vector<std::size_t> voxels;
  const auto fdr = threshold_map(z, mask, alpha, voxels);
  std::vector<std::uint8_t> sig(z.size(), 0);
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < voxels.size(); ++k)
    if (fdr.significant[k]) {
      sig[voxels[k]] = 1;
      n_pos += z.data[voxels[k]] > 0.0;
    }
  const auto in_mask = [&](std::size_t v) { return mask.data[v] != 0.0; };
  out["dims"] = z.dims;
  out["spacing"] = z.spacing;
  out["axis"] = axis_name;
  out["slice"] = slice;
  out["threshold"] = {{"n_voxels", voxels.size()},
                      {"n_significant", fdr.n_significant},
                      {"n_positive", n_pos},
                      {"p_threshold", number_or_null(fdr.threshold)}};
  out["slices"] = {
      {"pooled_z", slice_of(z, axis, slice, [&](std::size_t v) { return in_mask(v) ? json(z.data[v]) : json(); })},
      {"significant", slice_of(z, axis, slice, [&](std::size_t v) { return json(static_cast<int>(sig[v])); })},
      {"i2", slice_of(z, axis, slice, [&](std::size_t v) { return in_mask(v) ? json(i2.data[v]) : json(); })},
      {"prevalence", slice_of(z, axis, slice, [&](std::size_t v) { return json(prevalence.data[v]); })}};
  return out;
}

json get_representational(const AnalysisConfig& config, const QueryParams& params) {
  reject_unknown(params, {"metric"});
  const std::string outcome = param(params, "metric").value_or(
      config.representational_outcomes.empty() ? "WT_dice" : config.representational_outcomes.front());
  checked_outcome(outcome);
  const fs::path root = layout::kRepresentational;
  const fs::path dir = root / outcome;
  if (!fs::is_directory(config.output_path() / dir)) fail(404, "no representational results for " + outcome);

  json out;
  out["metric"] = outcome;
  out["run_config"] = json::parse(read_text_file(artifact(config, root / "run_config.json", "representational")));
  out["coords"] = csv_records(read_csv(artifact(config, root / "coords.csv", "representational")));
  out["summary"] = json::parse(read_text_file(artifact(config, dir / "summary.json", "representational")));
  const auto file = [&](const char* name) { return config.output_path() / dir / name; };
  if (!fs::exists(file("zmap.nii.gz"))) {
    out["z_grid"] = nullptr;
    return out;
  }
  out["points"] = csv_records(read_csv(file("points.csv")));
  out["clusters"] = csv_records(read_csv(file("clusters.csv")));
  out["effect_profile"] = csv_records(read_csv(file("effect_profile.csv")));
  const Volume z = read_volume(file("zmap.nii.gz"));
  const Volume coverage = read_volume(file("coverage.nii.gz"));
  const Volume fdr = read_volume(file("fdr_mask.nii.gz"));
  json grid = json::array(), sig = json::array();
  for (int y = 0; y < z.dims[1]; ++y) {
    json row = json::array(), srow = json::array();
    for (int x = 0; x < z.dims[0]; ++x) {
      const auto v = z.index(x, y, 0);
      row.push_back(coverage.data[v] != 0.0 ? json(z.data[v]) : json());
      srow.push_back(static_cast<int>(fdr.data[v]));
    }
    grid.push_back(std::move(row));
    sig.push_back(std::move(srow));
  }
  out["grid"] = z.dims[0];
  out["z_grid"] = grid;
  out["significant"] = sig;
  return out;
}

json post_recompute(const AnalysisConfig& config, const std::string& body) {
  json req;
  try {
    req = json::parse(body.empty() ? "{}" : body);
  } catch (const json::exception&) {
    fail(422, "request body must be a JSON object");
  }
  if (!req.is_object()) fail(422, "request body must be a JSON object");
  for (const auto& [k, v] : req.items())
    if (is_heavy_recompute_key(k))
      fail(409, k + " changes a heavy analysis stage; re-run it with the command-line tool");
  for (const auto& [k, v] : req.items())
    if (k != "alpha" && k != "wp" && k != "we") fail(422, "unknown recompute key " + k);
  const auto number = [&](const char* key) -> std::optional<double> {
    if (!req.contains(key)) return std::nullopt;
    if (!req[key].is_number()) fail(422, std::string(key) + " must be a number");
    return req[key].get<double>();
  };
  const double alpha = checked_alpha(number("alpha").value_or(config.alpha));
  const auto weights = weights_from(number("wp"), number("we"));

  json out;
  out["alpha"] = alpha;
  json spatial = json::object();
  for (const auto& outcome : config.spatial_outcomes) {
    const auto dir = config.output_path() / layout::kSpatial / outcome;
    if (!fs::exists(dir / "pooled_z.nii.gz")) continue;
    std::vector<std::size_t> voxels;
    const auto fdr = threshold_map(read_volume(dir / "pooled_z.nii.gz"), read_volume(dir / "analysis_mask.nii.gz"),
                                   alpha, voxels);
    spatial[outcome] = {{"n_voxels", voxels.size()},
                        {"n_significant", fdr.n_significant},
                        {"p_threshold", number_or_null(fdr.threshold)}};
  }
  out["spatial"] = spatial;
  json latent = json::object();
  for (const auto& outcome : config.representational_outcomes) {
    const auto dir = config.output_path() / layout::kRepresentational / outcome;
    if (!fs::exists(dir / "zmap.nii.gz")) continue;
    std::vector<std::size_t> cells;
    const auto fdr =
        threshold_map(read_volume(dir / "zmap.nii.gz"), read_volume(dir / "coverage.nii.gz"), alpha, cells);
    latent[outcome] = {{"n_cells", cells.size()},
                       {"n_significant", fdr.n_significant},
                       {"p_threshold", number_or_null(fdr.threshold)}};
  }
  out["representational"] = latent;
  if (weights) out["league"] = league_for(load_league(config), *weights);
  return out;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    const auto j = path.find('/', i);
    const auto part = path.substr(i, j == std::string::npos ? std::string::npos : j - i);
    if (!part.empty()) parts.push_back(part);
    if (j == std::string::npos) break;
    i = j + 1;
  }
  return parts;
}

json dispatch(const AnalysisConfig& config, const std::string& method, const std::string& path,
              const QueryParams& params, const std::string& body) {
  const auto parts = split_path(path);
  if (parts.size() < 2 || parts[0] != "api") fail(404, "unknown resource " + path);
  const std::string& r = parts[1];
  const bool get = method == "GET";
  if (r == "recompute" && parts.size() == 2) {
    if (method != "POST") fail(404, "recompute accepts POST only");
    return post_recompute(config, body);
  }
  if (!get) fail(404, "unknown resource " + method + " " + path);
  if (r == "cohort" && parts.size() == 2) {
    reject_unknown(params, {});
    return get_cohort(config);
  }
  if (r == "metrics" && parts.size() == 2) return get_metrics(config, params);
  if (r == "league" && parts.size() == 2) return get_league(config, params);
  if (r == "univariate" && parts.size() == 2) return get_univariate(config, params);
  if (r == "spatial" && parts.size() == 4) return get_spatial(config, parts[2], parts[3], params);
  if (r == "representational" && parts.size() == 2) return get_representational(config, params);
  fail(404, "unknown resource " + path);
}

}  // namespace

bool is_heavy_recompute_key(const std::string& key) {
  static const std::set<std::string> heavy{"n_perm",
                                           "seed",
                                           "fwhm_mm",
                                           "bootstrap_iters",
                                           "embedding",
                                           "n_neighbors",
                                           "min_dist",
                                           "exclude_oedema_only",
                                           "invert_distance_inequality",
                                           "two_class_models",
                                           "label_map",
                                           "univariate_outcomes",
                                           "spatial_outcomes",
                                           "representational_outcomes",
                                           "lme"};
  return heavy.count(key) > 0;
}

Service::Service(AnalysisConfig config) : config_(std::move(config)) {}

HttpResponse Service::handle(const std::string& method, const std::string& path, const QueryParams& params,
                             const std::string& body) const {
  HttpResponse res;
  res.manifest_hash = run_manifest_hash(config_.output_path());
  json payload;
  try {
    payload = dispatch(config_, method, path, params, body);
  } catch (const HttpError& e) {
    res.status = e.status;
    payload = {{"error", e.message}};
  } catch (const Error& e) {
    res.status = e.code() == ErrorCode::MissingUpstream ? 404 : 500;
    payload = {{"error", e.what()}};
  } catch (const std::exception& e) {
    res.status = 500;
    payload = {{"error", e.what()}};
  }
  json wrapped;
  wrapped["manifest_hash"] = res.manifest_hash;
  wrapped["status"] = res.status;
  for (auto& [k, v] : payload.items()) wrapped[k] = std::move(v);
  res.body = wrapped.dump();
  return res;
}

void Service::serve(const std::string& host, int port) const {
  httplib::Server server;
  const auto route = [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams params;
    for (const auto& [k, v] : req.params) params[k] = v;
    const auto r = handle(req.method, req.path, params, req.body);
    res.status = r.status;
    res.set_header("X-Manifest-Hash", r.manifest_hash);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
  };
  server.Get(R"(/.*)", route);
  server.Post(R"(/.*)", route);
  if (!server.listen(host, port)) throw Error(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace fairboard
