#include <doctest.h>

#include <chrono>
#include <json.hpp>
#include <thread>

#include "fairboard/csv.hpp"
#include "fairboard/manifest.hpp"
#include "fairboard/pipeline.hpp"
#include "fairboard/service.hpp"
#include "fairboard/synth.hpp"
#include "support.hpp"

// After Eigen: resolv.h defines a _res macro.
#include <httplib.h>

using namespace fairboard;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// One analysed study shared by every case.
struct Study {
  fbtest::TempDir dir{"service"};
  AnalysisConfig config;
  Study() {
    SynthOptions opt;
    opt.n_patients = 40;
    write_synthetic_study(dir.path(), opt);
    config = load_config(dir / "config.json");
    config.n_perm = 200;
    config.bootstrap_iters = 200;
    cmd_all(config);
  }
};

const Study& study() {
  static const Study s;
  return s;
}

json get(const Service& svc, const std::string& path, const QueryParams& q = {}, int status = 200) {
  const auto r = svc.handle("GET", path, q);
  CHECK_MESSAGE(r.status == status, path << " -> " << r.status << " " << r.body);
  const auto j = json::parse(r.body);
  CHECK(j.is_object());
  CHECK(j.at("manifest_hash") == r.manifest_hash);
  CHECK(j.at("status") == r.status);
  return j;
}

}  // namespace

TEST_CASE("cohort endpoint") {
  const Service svc(study().config);
  const auto j = get(svc, "/api/cohort");
  CHECK(j["n_patients"] == 40);
  CHECK(j["patients"].size() == 40);
  int total = 0;
  for (const auto& [k, v] : j["counts"]["sex"].items()) total += v.get<int>();
  CHECK(total == 40);
  CHECK(j["counts"]["resection"].contains("missing"));
  CHECK(j["age_years"]["n"].get<int>() == 40);
  get(svc, "/api/cohort", {{"x", "1"}}, 422);
}

TEST_CASE("metrics endpoint") {
  const Service svc(study().config);
  const auto all = get(svc, "/api/metrics");
  CHECK(all["models"].size() == 3);
  CHECK(all["outcomes"].size() == kOutcomeCount);
  const auto metrics = read_csv(study().config.output_path() / layout::kMetrics);
  CHECK(all["records"].size() == metrics.rows.size());
  const auto one = get(svc, "/api/metrics", {{"model", "model_b"}, {"outcome", "WT_dice"}});
  for (const auto& r : one["records"]) CHECK(r["model_id"] == "model_b");
  get(svc, "/api/metrics", {{"model", "nope"}}, 404);
  get(svc, "/api/metrics", {{"outcome", "WT_bogus"}}, 422);
}

TEST_CASE("league endpoint") {
  const Service svc(study().config);
  const auto stored = get(svc, "/api/league");
  const auto file = json::parse(read_text_file(study().config.output_path() / layout::kLeagueJson));
  CHECK(stored["models"] == file["models"]);
  // The 50/50 reweighting agrees with the stored 50/50 scenario.
  const auto half = get(svc, "/api/league", {{"wp", "0.5"}});
  CHECK(half["weights"]["we"] == 0.5);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(half["models"][m]["composite_scores"][0] == file["models"][m]["composite_scores"][2]);
    CHECK(half["models"][m]["composite_ranks"][0] == file["models"][m]["composite_ranks"][2]);
  }
  const auto perf_only = get(svc, "/api/league", {{"wp", "1"}, {"we", "0"}});
  for (const auto& m : perf_only["models"]) CHECK(m["composite_ranks"][0] == m["perf_rank"]);
  get(svc, "/api/league", {{"wp", "2"}}, 422);
  get(svc, "/api/league", {{"wp", "0.5"}, {"we", "0.6"}}, 422);
  get(svc, "/api/league", {{"wp", "abc"}}, 422);
  get(svc, "/api/league", {{"wp", "0.5x"}}, 422);
}

TEST_CASE("univariate endpoint") {
  const Service svc(study().config);
  const auto gaps = get(svc, "/api/univariate", {{"factor", "sex"}, {"metric", "WT_dice"}});
  CHECK(gaps["kind"] == "gaps");
  CHECK(gaps["rows"].size() > 0);
  for (const auto& r : gaps["rows"]) {
    CHECK(r["factor"] == "sex");
    CHECK(r["outcome"] == "WT_dice");
  }
  const auto age = get(svc, "/api/univariate", {{"factor", "age"}});
  CHECK(age["kind"] == "age_bins");
  get(svc, "/api/univariate", {{"factor", "shoe_size"}}, 422);
}

TEST_CASE("spatial endpoint") {
  const Service svc(study().config);
  const auto j = get(svc, "/api/spatial/WT/dice");
  CHECK(j["outcome"] == "WT_dice");
  REQUIRE(!j["slices"].is_null());
  const int nx = j["dims"][0], ny = j["dims"][1], nz = j["dims"][2];
  CHECK(j["slice"] == nz / 2);
  CHECK(j["slices"]["pooled_z"].size() == static_cast<std::size_t>(ny));
  CHECK(j["slices"]["pooled_z"][0].size() == static_cast<std::size_t>(nx));
  const auto xs = get(svc, "/api/spatial/WT/dice", {{"axis", "x"}, {"slice", "3"}});
  CHECK(xs["slices"]["significant"].size() == static_cast<std::size_t>(nz));
  CHECK(xs["slices"]["significant"][0].size() == static_cast<std::size_t>(ny));
  // alpha = 1 admits every tested voxel.
  const auto loose = get(svc, "/api/spatial/WT/dice", {{"alpha", "1"}});
  CHECK(loose["threshold"]["n_significant"] == loose["threshold"]["n_voxels"]);
  get(svc, "/api/spatial/WT/dice", {{"alpha", "0"}}, 422);
  get(svc, "/api/spatial/WT/dice", {{"axis", "w"}}, 422);
  get(svc, "/api/spatial/WT/dice", {{"slice", "9999"}}, 422);
  get(svc, "/api/spatial/WT/bogus", {}, 422);
  get(svc, "/api/spatial/ET/vol_sim", {}, 404);
}

TEST_CASE("representational endpoint") {
  const Service svc(study().config);
  const auto outcome = study().config.representational_outcomes.front();
  const auto j = get(svc, "/api/representational", {{"metric", outcome}});
  CHECK(j["coords"].size() > 0);
  CHECK(j["run_config"].contains("pca"));
  if (!j["z_grid"].is_null()) {
    CHECK(j["z_grid"].size() == 300);
    CHECK(j["z_grid"][0].size() == 300);
    CHECK(j["significant"].size() == 300);
  }
}

TEST_CASE("recompute") {
  const Service svc(study().config);
  const auto post = [&](const std::string& body) { return svc.handle("POST", "/api/recompute", {}, body); };
  const auto ok = post(R"({"alpha": 0.1, "wp": 0.7, "we": 0.3})");
  CHECK(ok.status == 200);
  const auto j = json::parse(ok.body);
  CHECK(j["alpha"] == 0.1);
  CHECK(j["league"]["weights"]["wp"] == 0.7);
  CHECK(j["spatial"].size() == study().config.spatial_outcomes.size());
  CHECK(post(R"({"n_perm": 50})").status == 409);
  CHECK(post(R"({"seed": 1, "alpha": 0.1})").status == 409);
  CHECK(post(R"({"embedding": {"n_neighbors": 5}})").status == 409);
  CHECK(post(R"({"colour": "red"})").status == 422);
  CHECK(post(R"({"alpha": "big"})").status == 422);
  CHECK(post("[1, 2]").status == 422);
  CHECK(post("{oops").status == 422);
  CHECK(svc.handle("GET", "/api/recompute", {}).status == 404);
}

TEST_CASE("unknown resources and missing artifacts") {
  const Service svc(study().config);
  CHECK(svc.handle("GET", "/api/nothing", {}).status == 404);
  CHECK(svc.handle("GET", "/elsewhere", {}).status == 404);
  CHECK(svc.handle("DELETE", "/api/cohort", {}).status == 404);
  fbtest::TempDir empty("empty_out");
  auto c = study().config;
  c.output_dir = empty.path();
  const Service blank(c);
  const auto r = blank.handle("GET", "/api/league", {});
  CHECK(r.status == 404);
  CHECK(json::parse(r.body)["manifest_hash"] == "");
}

TEST_CASE("concurrent identical requests give identical bodies") {
  const Service svc(study().config);
  std::vector<std::string> bodies(8);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    threads.emplace_back([&, i] { bodies[i] = svc.handle("GET", "/api/league", {{"wp", "0.3"}}).body; });
  for (auto& t : threads) t.join();
  for (const auto& b : bodies) CHECK(b == bodies.front());
}

TEST_CASE("HTTP round trip") {
  const Service svc(study().config);
  const int port = 20000 + static_cast<int>(::getpid() % 20000);
  std::thread([&svc, port] {
    try {
      svc.serve("127.0.0.1", port);
    } catch (...) {
    }
  }).detach();
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int attempt = 0; attempt < 100 && !res; ++attempt) {
    res = client.Get("/api/league?wp=0.5");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type").rfind("application/json", 0) == 0);
  CHECK(res->get_header_value("X-Manifest-Hash") == run_manifest_hash(study().config.output_path()));
  CHECK(res->body == svc.handle("GET", "/api/league", {{"wp", "0.5"}}).body);
  const auto bad = client.Post("/api/recompute", R"({"n_perm": 10})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 409);
}
