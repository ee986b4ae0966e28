#include "fairboard/league.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <numeric>

#include "fairboard/error.hpp"

namespace fairboard::league {

std::string Scenario::label() const {
  return std::to_string(static_cast<int>(std::lround(wp * 100))) + "/" +
         std::to_string(static_cast<int>(std::lround(we * 100)));
}

void validate(const Scenario& s) {
  if (!(s.wp >= 0.0 && s.wp <= 1.0 && s.we >= 0.0 && s.we <= 1.0))
    throw Error(ErrorCode::BadWeights, "weights must lie in [0, 1]");
  if (std::fabs(s.wp + s.we - 1.0) > 1e-9) throw Error(ErrorCode::BadWeights, "weights must sum to 1");
}

ModelOutcomes model_outcome_means(const std::vector<MetricRecord>& records, bool exclude_oedema_only) {
  ModelOutcomes out;
  std::map<std::string, std::size_t> slot;
  std::vector<std::array<double, kOutcomeCount>> sums;
  std::vector<std::array<std::size_t, kOutcomeCount>> counts;
  for (const auto& r : records) {
    if (exclude_oedema_only && r.gt_oedema_only) continue;
    auto [it, fresh] = slot.emplace(r.model_id, out.models.size());
    if (fresh) {
      out.models.push_back(r.model_id);
      sums.emplace_back().fill(0.0);
      counts.emplace_back().fill(0);
    }
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      if (!std::isfinite(r.values[o])) continue;
      sums[it->second][o] += r.values[o];
      ++counts[it->second][o];
    }
  }
  for (std::size_t m = 0; m < out.models.size(); ++m) {
    OutcomeRow row;
    for (std::size_t o = 0; o < kOutcomeCount; ++o)
      row[o] = counts[m][o] ? sums[m][o] / static_cast<double>(counts[m][o]) : kMissing;
    out.means.push_back(row);
  }
  return out;
}

std::vector<double> minmax_column(const std::vector<double>& column) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : column)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  std::vector<double> out(column.size(), kMissing);
  if (!(hi > lo)) return out;
  for (std::size_t i = 0; i < column.size(); ++i)
    if (std::isfinite(column[i])) out[i] = (column[i] - lo) / (hi - lo);
  return out;
}

namespace {

template <std::size_t N>
std::vector<double> normalized_means(const std::vector<std::array<double, N>>& table,
                                     const std::array<double, N>& orientation) {
  const std::size_t k = table.size();
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  std::vector<double> column(k);
  for (std::size_t c = 0; c < N; ++c) {
    for (std::size_t m = 0; m < k; ++m) column[m] = orientation[c] * table[m][c];
    const auto norm = minmax_column(column);
    for (std::size_t m = 0; m < k; ++m)
      if (std::isfinite(norm[m])) {
        sum[m] += norm[m];
        ++count[m];
      }
  }
  std::vector<double> out(k);
  for (std::size_t m = 0; m < k; ++m) out[m] = count[m] ? sum[m] / static_cast<double>(count[m]) : 0.5;
  return out;
}

}  // namespace

std::vector<double> performance_scores(const std::vector<OutcomeRow>& means) {
  if (means.size() < 2) throw Error(ErrorCode::InsufficientModels, "league needs at least two models");
  OutcomeRow orientation;
  for (std::size_t o = 0; o < kOutcomeCount; ++o) orientation[o] = higher_is_better(outcome_metric(o)) ? 1.0 : -1.0;
  return normalized_means(means, orientation);
}

std::vector<double> equity_scores(const std::vector<InequalityRow>& cells) {
  if (cells.size() < 2) throw Error(ErrorCode::InsufficientModels, "league needs at least two models");
  InequalityRow orientation;
  orientation.fill(1.0);
  auto inequality = normalized_means(cells, orientation);
  for (double& v : inequality) v = 1.0 - v;
  return inequality;
}

std::vector<int> rank_descending(const std::vector<double>& scores, const std::vector<std::string>& models) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return models[a] < models[b];
  });
  std::vector<int> ranks(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r + 1);
  return ranks;
}

LeagueTable composite_table(const std::vector<std::string>& models, const std::vector<double>& perf,
                            const std::vector<double>& equity, const std::vector<Scenario>& scenarios) {
  if (models.size() != perf.size() || models.size() != equity.size())
    throw Error(ErrorCode::InvalidArgument, "one score per model required");
  if (models.size() < 2) throw Error(ErrorCode::InsufficientModels, "league needs at least two models");
  for (const auto& s : scenarios) validate(s);

  LeagueTable table;
  table.scenarios = scenarios;
  const auto perf_rank = rank_descending(perf, models);
  const auto equity_rank = rank_descending(equity, models);
  for (std::size_t m = 0; m < models.size(); ++m)
    table.entries.push_back({models[m], perf[m], equity[m], perf_rank[m], equity_rank[m], {}, {}});
  for (const auto& s : scenarios) {
    std::vector<double> composite(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) composite[m] = s.wp * perf[m] + s.we * equity[m];
    const auto ranks = rank_descending(composite, models);
    for (std::size_t m = 0; m < models.size(); ++m) {
      table.entries[m].composite_scores.push_back(composite[m]);
      table.entries[m].composite_ranks.push_back(ranks[m]);
    }
  }
  return table;
}

CsvTable LeagueTable::to_csv() const {
  CsvTable t;
  t.header = {"model_id", "perf_score", "equity_score", "perf_rank", "equity_rank"};
  for (const auto& s : scenarios) {
    t.header.push_back("composite_" + s.label());
    t.header.push_back("rank_" + s.label());
  }
  for (const auto& e : entries) {
    std::vector<std::string> row{e.model_id, format_number(e.perf_score), format_number(e.equity_score),
                                 std::to_string(e.perf_rank), std::to_string(e.equity_rank)};
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      row.push_back(format_number(e.composite_scores[s]));
      row.push_back(std::to_string(e.composite_ranks[s]));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string LeagueTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& s : scenarios)
    doc["scenarios"].push_back({{"label", s.label()}, {"wp", s.wp}, {"we", s.we}});
  doc["models"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json m{{"model_id", e.model_id},   {"perf_score", e.perf_score},
                             {"equity_score", e.equity_score}, {"perf_rank", e.perf_rank},
                             {"equity_rank", e.equity_rank}};
    m["composite_scores"] = e.composite_scores;
    m["composite_ranks"] = e.composite_ranks;
    doc["models"].push_back(std::move(m));
  }
  return doc.dump(2);
}

}  // namespace fairboard::league
