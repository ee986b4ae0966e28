#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "fairboard/error.hpp"
#include "fairboard/league.hpp"
#include "fairboard/rng.hpp"
#include "league_oracle.hpp"

using namespace fairboard;
using namespace fairboard::league;
using doctest::Approx;

namespace {

std::vector<std::string> model_names(std::size_t k) {
  std::vector<std::string> m;
  for (std::size_t i = 0; i < k; ++i) m.push_back("model_" + std::to_string(i));
  return m;
}

}  // namespace

TEST_CASE("scenario validation") {
  CHECK_NOTHROW(validate({0.3, 0.7}));
  CHECK_NOTHROW(validate({1.0, 0.0}));
  CHECK_THROWS_AS(validate({0.6, 0.6}), Error);
  CHECK_THROWS_AS(validate({1.2, -0.2}), Error);
  CHECK(Scenario{0.9, 0.1}.label() == "90/10");
  CHECK(kDefaultScenarios.size() == 5);
}

TEST_CASE("min-max normalization") {
  const auto n = minmax_column({2, 4, NAN, 3});
  CHECK(n[0] == 0.0);
  CHECK(n[1] == 1.0);
  CHECK(std::isnan(n[2]));
  CHECK(n[3] == 0.5);
  for (double v : minmax_column({0.5, 0.5})) CHECK(std::isnan(v));
}

TEST_CASE("hand-worked three-model table") {
  const fbtest::HandLeague h;
  const auto perf = performance_scores(h.means);
  const auto eq = equity_scores(h.cells);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(std::fabs(perf[m] - h.perf[m]) < 1e-10);
    CHECK(std::fabs(eq[m] - h.equity[m]) < 1e-10);
  }
  const auto t = composite_table(h.models, perf, eq, {{0.5, 0.5}});
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(std::fabs(t.entries[m].composite_scores[0] - h.composite_50[m]) < 1e-10);
    CHECK(t.entries[m].perf_rank == h.perf_rank[m]);
  }
  CHECK(t.entries[0].composite_ranks[0] == 1);
  CHECK(t.entries[2].composite_ranks[0] == 3);
}

TEST_CASE("rank reversal between extreme scenarios") {
  const auto t = composite_table({"A", "B"}, {0.9, 0.5}, {0.1, 0.9}, {{0.9, 0.1}, {0.1, 0.9}});
  CHECK(t.entries[0].composite_scores[0] == Approx(0.82));
  CHECK(t.entries[1].composite_scores[0] == Approx(0.54));
  CHECK(t.entries[0].composite_scores[1] == Approx(0.18));
  CHECK(t.entries[1].composite_scores[1] == Approx(0.86));
  CHECK(t.entries[0].composite_ranks == std::vector<int>{1, 2});
  CHECK(t.entries[1].composite_ranks == std::vector<int>{2, 1});
}

TEST_CASE("ties broken by model id") {
  CHECK(rank_descending({0.5, 0.5, 0.9}, {"b", "a", "c"}) == std::vector<int>{3, 2, 1});
}

TEST_CASE("degenerate inputs") {
  OutcomeRow r;
  r.fill(0.5);
  CHECK_THROWS_AS(performance_scores({r}), Error);
  const auto flat = performance_scores({r, r, r});
  for (double v : flat) CHECK(v == 0.5);
  CHECK_THROWS_AS(composite_table({"a"}, {1}, {1}), Error);
  CHECK_THROWS_AS(composite_table({"a", "b"}, {1, 0}, {1, 0}, {{0.5, 0.6}}), Error);
}

TEST_CASE("oedema-only cases are excluded from means") {
  std::vector<MetricRecord> recs(3);
  recs[0].model_id = recs[1].model_id = "a";
  recs[2].model_id = "b";
  recs[0].values.fill(1.0);
  recs[1].values.fill(0.0);
  recs[1].gt_oedema_only = true;
  recs[2].values.fill(0.5);
  recs[2].values[3] = NAN;
  const auto m = model_outcome_means(recs);
  CHECK(m.models == std::vector<std::string>{"a", "b"});
  CHECK(m.means[0][0] == 1.0);
  CHECK(std::isnan(m.means[1][3]));
  CHECK(model_outcome_means(recs, false).means[0][0] == 0.5);
}

TEST_CASE("properties on random leagues") {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = 2 + rng.index(6);
    const auto models = model_names(k);
    std::vector<double> perf(k), eq(k);
    for (auto& v : perf) v = rng.uniform();
    for (auto& v : eq) v = rng.uniform();

    // Performance-only weighting reproduces the performance ranking.
    const auto only = composite_table(models, perf, eq, {{1.0, 0.0}, {0.0, 1.0}});
    for (const auto& e : only.entries) {
      CHECK(e.composite_ranks[0] == e.perf_rank);
      CHECK(e.composite_ranks[1] == e.equity_rank);
    }

    // Raising one model's scores never worsens its rank in any scenario.
    const auto base = composite_table(models, perf, eq);
    const std::size_t m = rng.index(k);
    auto perf2 = perf, eq2 = eq;
    perf2[m] += rng.uniform() * 0.3;
    eq2[m] += rng.uniform() * 0.3;
    const auto better = composite_table(models, perf2, eq2);
    for (std::size_t s = 0; s < kDefaultScenarios.size(); ++s)
      CHECK(better.entries[m].composite_ranks[s] <= base.entries[m].composite_ranks[s]);

    // A pair swaps order at most once as the performance weight falls.
    std::vector<Scenario> sweep;
    for (int i = 0; i <= 20; ++i) sweep.push_back({1.0 - i / 20.0, i / 20.0});
    const auto st = composite_table(models, perf, eq, sweep);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) {
        int flips = 0;
        for (std::size_t s = 1; s < sweep.size(); ++s) {
          const bool prev = st.entries[a].composite_ranks[s - 1] < st.entries[b].composite_ranks[s - 1];
          const bool cur = st.entries[a].composite_ranks[s] < st.entries[b].composite_ranks[s];
          flips += prev != cur;
        }
        CHECK(flips <= 1);
      }

    // Composite lies between the two component scores.
    for (const auto& e : base.entries)
      for (double c : e.composite_scores) {
        CHECK(c >= std::min(e.perf_score, e.equity_score) - 1e-12);
        CHECK(c <= std::max(e.perf_score, e.equity_score) + 1e-12);
      }
  }
}

TEST_CASE("serialization") {
  const auto t = composite_table({"A", "B"}, {0.9, 0.5}, {0.1, 0.9});
  const auto csv = t.to_csv();
  CHECK(csv.header.size() == 5 + 2 * 5);
  CHECK(csv.header[5] == "composite_90/10");
  CHECK(csv.rows.size() == 2);
  const auto j = nlohmann::json::parse(t.to_json());
  CHECK(j["models"].size() == 2);
  CHECK(j["scenarios"][2]["label"] == "50/50");
  CHECK(j["models"][0]["composite_ranks"].size() == 5);
}
