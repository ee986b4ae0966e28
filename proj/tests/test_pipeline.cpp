#include <doctest.h>

#include <cstdlib>
#include <json.hpp>

#include "fairboard/csv.hpp"
#include "fairboard/error.hpp"
#include "fairboard/manifest.hpp"
#include "fairboard/pipeline.hpp"
#include "fairboard/synth.hpp"
#include "support.hpp"

using namespace fairboard;
namespace fs = std::filesystem;

namespace {

AnalysisConfig study(const fbtest::TempDir& dir, SynthOptions opt = {}) {
  write_synthetic_study(dir.path(), opt);
  auto c = load_config(dir / "config.json");
  c.n_perm = 200;
  c.bootstrap_iters = 200;
  return c;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ParseError;
}

}  // namespace

TEST_CASE("evaluate on a three-model, four-patient study") {
  fbtest::TempDir dir("eval");
  SynthOptions opt;
  opt.n_patients = 4;
  opt.n_oedema_only = 0;
  opt.dims = {16, 16, 16};
  const auto c = study(dir, opt);
  cmd_evaluate(c);
  const auto m = read_csv(c.output_path() / layout::kMetrics);
  CHECK(m.rows.size() == 12);
  CHECK(m.header.size() == 2 + kOutcomeCount + 1);
  const auto col = m.require_column("NET_dice");
  const auto model = m.require_column("model_id");
  for (const auto& r : m.rows) CHECK((r[col].empty()) == (r[model] == "model_c"));
  CHECK(read_csv(c.output_path() / layout::kExclusions).rows.empty());
  CHECK(fs::exists(c.output_path() / "manifests" / "evaluate.json"));
}

TEST_CASE("oedema-only and orphan cases are excluded") {
  fbtest::TempDir dir("excl");
  SynthOptions opt;
  opt.n_patients = 6;
  opt.n_oedema_only = 2;
  opt.dims = {16, 16, 16};
  const auto c = study(dir, opt);
  // A prediction with no ground truth.
  fs::copy_file(c.masks_path() / "model_a" / "SYN-001.nii.gz", c.masks_path() / "model_a" / "EXTRA.nii.gz");
  // A missing prediction.
  fs::remove(c.masks_path() / "model_b" / "SYN-001.nii.gz");
  cmd_evaluate(c);
  CHECK(read_csv(c.output_path() / layout::kMetrics).rows.size() == 3 * 4 - 1);
  const auto ex = read_csv(c.output_path() / layout::kExclusions);
  int oedema = 0, orphan = 0, missing = 0;
  for (const auto& r : ex.rows) {
    oedema += r[2].find("oedema") != std::string::npos;
    orphan += r[2].rfind("MissingGroundTruth", 0) == 0;
    missing += r[2] == "missing prediction";
  }
  CHECK(oedema == 6);
  CHECK(orphan == 1);
  CHECK(missing == 1);
}

TEST_CASE("stages require their upstream outputs") {
  fbtest::TempDir dir("upstream");
  SynthOptions opt;
  opt.n_patients = 4;
  opt.dims = {16, 16, 16};
  const auto c = study(dir, opt);
  CHECK(code_of([&] { cmd_league(c); }) == ErrorCode::MissingUpstream);
  CHECK(code_of([&] { cmd_univariate(c); }) == ErrorCode::MissingUpstream);
  CHECK(code_of([&] { cmd_spatial(c); }) == ErrorCode::MissingUpstream);
  auto bad = c;
  bad.masks_dir = "nowhere";
  CHECK(code_of([&] { cmd_evaluate(bad); }) == ErrorCode::MissingUpstream);
  fs::remove_all(c.masks_path() / "ground_truth");
  fs::create_directories(c.masks_path() / "ground_truth");
  CHECK(code_of([&] { cmd_evaluate(c); }) == ErrorCode::MissingGroundTruth);
}

TEST_CASE("configuration") {
  fbtest::TempDir dir("config");
  const auto c = parse_config(R"({"alpha": 0.1, "seed": 7, "embedding": {"n_neighbors": 10, "min_dist": 0.3}})",
                              dir.path());
  CHECK(c.alpha == 0.1);
  CHECK(c.seed == 7);
  CHECK(c.embedding.n_neighbors == 10);
  CHECK(c.fwhm_mm == 8.0);
  CHECK(c.output_path() == dir.path() / "out");
  CHECK_THROWS_AS(parse_config(R"({"alpha": 1.5})", dir.path()).validate(), Error);
  CHECK_THROWS_AS(parse_config(R"({"n_perm": 5})", dir.path()).validate(), Error);
  CHECK_THROWS_AS(parse_config(R"({"fwhm_mm": 20})", dir.path()).validate(), Error);
  CHECK_THROWS_AS(parse_config("{not json", dir.path()), Error);
  CHECK_THROWS_AS(parse_config(R"({"scenarios": [[0.5, 0.6]]})", dir.path()).validate(), Error);

  auto e = c;
  ::setenv("FAIRBOARD_SEED", "123", 1);
  apply_environment(e);
  CHECK(e.seed == 123);
  CHECK(e.embedding.seed == 123);
  ::setenv("FAIRBOARD_SEED", "abc", 1);
  CHECK_THROWS_AS(apply_environment(e), Error);
  ::unsetenv("FAIRBOARD_SEED");

  auto p1 = c, p2 = c;
  p2.output_dir = "/elsewhere";
  CHECK(p1.parameters_json() == p2.parameters_json());
  p2.alpha = 0.2;
  CHECK(p1.parameters_json() != p2.parameters_json());
}

TEST_CASE("volume listing") {
  fbtest::TempDir dir("list");
  write_text_file(dir / "b.nii.gz", "x");
  write_text_file(dir / "a.nii", "x");
  write_text_file(dir / "notes.txt", "x");
  const auto v = list_volumes(dir.path());
  REQUIRE(v.size() == 2);
  CHECK(v[0].first == "a");
  CHECK(v[1].first == "b");
}

TEST_CASE("full run is complete and reproducible") {
  fbtest::TempDir a("run_a"), b("run_b");
  SynthOptions opt;
  opt.n_patients = 40;
  const auto ca = study(a, opt), cb = study(b, opt);
  const auto reports = cmd_all(ca);
  CHECK(reports.size() == 7);
  cmd_all(cb);

  const fs::path out = ca.output_path();
  for (const char* f : {layout::kMetrics, layout::kGaps, layout::kAgeBins, layout::kInequality, layout::kLeagueCsv,
                        layout::kLeagueJson, layout::kCoefficients, layout::kVariance})
    CHECK_MESSAGE(fs::exists(out / f), f);
  CHECK(read_csv(out / layout::kCoefficients).rows.size() == 128);
  CHECK(read_csv(out / layout::kInequality).rows.size() == 3 * kOutcomeCount);
  const auto league = nlohmann::json::parse(read_text_file(out / layout::kLeagueJson));
  CHECK(league["models"].size() == 3);
  CHECK(fs::exists(out / "spatial" / "WT_dice" / "summary.json"));
  CHECK(fs::exists(out / "representational" / "run_config.json"));

  const auto ha = run_manifest_hash(out), hb = run_manifest_hash(cb.output_path());
  CHECK(ha.size() == 64);
  CHECK(ha == hb);
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out);
    CHECK_MESSAGE(read_text_file(e.path()) == read_text_file(cb.output_path() / rel), rel.string());
  }

  // Changing a parameter changes the run hash.
  auto cc = ca;
  cc.alpha = 0.1;
  cmd_league(cc);
  CHECK(run_manifest_hash(out) != ha);
}

TEST_CASE("distance inequality orientation") {
  fbtest::TempDir dir("invert");
  SynthOptions opt;
  opt.n_patients = 14;
  opt.dims = {16, 16, 16};
  auto c = study(dir, opt);
  cmd_evaluate(c);
  cmd_inequality(c);
  const auto raw = read_csv(c.output_path() / layout::kInequality);
  c.invert_distance_inequality = true;
  cmd_inequality(c);
  const auto inv = read_csv(c.output_path() / layout::kInequality);
  const auto outcome = raw.require_column("outcome"), gini = raw.require_column("gini");
  REQUIRE(raw.rows.size() == inv.rows.size());
  int same = 0, changed = 0;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& name = raw.rows[r][outcome];
    if (name == "WT_dice") same += raw.rows[r][gini] == inv.rows[r][gini];
    if (name == "WT_hd95_mm") changed += raw.rows[r][gini] != inv.rows[r][gini];
  }
  CHECK(same == 3);
  CHECK(changed == 3);
}
