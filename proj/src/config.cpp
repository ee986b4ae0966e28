#include "fairboard/config.hpp"

#include <cstdlib>
#include <json.hpp>

#include "fairboard/csv.hpp"
#include "fairboard/error.hpp"
#include "fairboard/seg_metrics.hpp"

namespace fairboard {

namespace {

std::vector<std::string> outcome_names(std::initializer_list<Metric> metrics) {
  std::vector<std::string> out;
  for (auto c : kCompartments)
    for (auto m : metrics) out.push_back(outcome_name(outcome_index(c, m)));
  return out;
}

}  // namespace

AnalysisConfig::AnalysisConfig() {
  for (std::size_t o = 0; o < kOutcomeCount; ++o) univariate_outcomes.push_back(outcome_name(o));
  spatial_outcomes = outcome_names({Metric::Dice, Metric::Hd95});
  representational_outcomes = outcome_names({Metric::Dice});
}

std::filesystem::path AnalysisConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

LabelMap AnalysisConfig::label_map() const {
  return label_map_path ? LabelMap::load(resolve(*label_map_path)) : LabelMap::defaults();
}

void AnalysisConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  if (!(fwhm_mm >= 0.0 && fwhm_mm <= 16.0)) throw Error(ErrorCode::InvalidArgument, "fwhm_mm must lie in [0, 16]");
  if (n_perm < 100) throw Error(ErrorCode::InvalidArgument, "n_perm must be at least 100");
  if (bootstrap_iters < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap_iters must be positive");
  if (embedding.n_neighbors < 2) throw Error(ErrorCode::InvalidArgument, "n_neighbors must be at least 2");
  if (!(embedding.min_dist >= 0.0)) throw Error(ErrorCode::InvalidArgument, "min_dist must be non-negative");
  for (const auto& s : scenarios) league::validate(s);
  for (const auto* list : {&univariate_outcomes, &spatial_outcomes, &representational_outcomes})
    for (const auto& name : *list) outcome_from_name(name);
}

std::string AnalysisConfig::parameters_json() const {
  nlohmann::ordered_json j;
  j["alpha"] = alpha;
  j["fwhm_mm"] = fwhm_mm;
  j["n_perm"] = n_perm;
  j["bootstrap_iters"] = bootstrap_iters;
  j["seed"] = seed;
  j["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& s : scenarios) j["scenarios"].push_back({s.wp, s.we});
  j["embedding"] = {{"method", embedding.method == repr::EmbedMethod::Umap ? "umap" : "pca"},
                    {"n_neighbors", embedding.n_neighbors},
                    {"min_dist", embedding.min_dist},
                    {"metric", embedding.metric}};
  j["exclude_oedema_only"] = exclude_oedema_only;
  j["invert_distance_inequality"] = invert_distance_inequality;
  j["two_class_models"] = two_class_models;
  j["univariate_outcomes"] = univariate_outcomes;
  j["spatial_outcomes"] = spatial_outcomes;
  j["representational_outcomes"] = representational_outcomes;
  return j.dump();
}

AnalysisConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  AnalysisConfig c;
  c.base_dir = base_dir;
  try {
    if (j.contains("cohort_csv")) c.cohort_csv = j["cohort_csv"].get<std::string>();
    if (j.contains("masks_dir")) c.masks_dir = j["masks_dir"].get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("label_map") && !j["label_map"].is_null()) c.label_map_path = j["label_map"].get<std::string>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("fwhm_mm")) c.fwhm_mm = j["fwhm_mm"].get<double>();
    if (j.contains("n_perm")) c.n_perm = j["n_perm"].get<int>();
    if (j.contains("bootstrap_iters")) c.bootstrap_iters = j["bootstrap_iters"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& s : j["scenarios"]) c.scenarios.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    }
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      if (e.contains("method")) {
        const auto m = e["method"].get<std::string>();
        if (m == "umap")
          c.embedding.method = repr::EmbedMethod::Umap;
        else if (m == "pca")
          c.embedding.method = repr::EmbedMethod::Pca;
        else
          throw Error(ErrorCode::InvalidArgument, "embedding method must be umap or pca");
      }
      if (e.contains("n_neighbors")) c.embedding.n_neighbors = e["n_neighbors"].get<int>();
      if (e.contains("min_dist")) c.embedding.min_dist = e["min_dist"].get<double>();
      if (e.contains("metric")) c.embedding.metric = e["metric"].get<std::string>();
    }
    if (j.contains("exclude_oedema_only")) c.exclude_oedema_only = j["exclude_oedema_only"].get<bool>();
    if (j.contains("invert_distance_inequality"))
      c.invert_distance_inequality = j["invert_distance_inequality"].get<bool>();
    if (j.contains("two_class_models")) c.two_class_models = j["two_class_models"].get<std::vector<std::string>>();
    if (j.contains("univariate_outcomes")) c.univariate_outcomes = j["univariate_outcomes"].get<std::vector<std::string>>();
    if (j.contains("spatial_outcomes")) c.spatial_outcomes = j["spatial_outcomes"].get<std::vector<std::string>>();
    if (j.contains("representational_outcomes"))
      c.representational_outcomes = j["representational_outcomes"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  c.embedding.seed = c.seed;
  c.validate();
  return c;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingUpstream, "config file not found: " + path.string());
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(read_text_file(path), base);
}

void apply_environment(AnalysisConfig& config) {
  if (const char* s = std::getenv("FAIRBOARD_SEED"); s && *s) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != std::string(s).size()) throw std::invalid_argument(s);
      config.seed = v;
      config.embedding.seed = v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string("FAIRBOARD_SEED is not an unsigned integer: ") + s);
    }
  }
}

}  // namespace fairboard
