#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fairboard/csv.hpp"
#include "fairboard/seg_metrics.hpp"

namespace fairboard::league {

using OutcomeRow = std::array<double, kOutcomeCount>;
// 7 indices x 28 outcomes, index-major: cell = index * 28 + outcome.
inline constexpr std::size_t kCellCount = 7 * kOutcomeCount;
using InequalityRow = std::array<double, kCellCount>;

struct Scenario {
  double wp;
  double we;
  // "90/10" style label.
  std::string label() const;
};

inline const std::vector<Scenario> kDefaultScenarios{{0.9, 0.1}, {0.7, 0.3}, {0.5, 0.5}, {0.3, 0.7}, {0.1, 0.9}};

// Throws BadWeights unless both weights are in [0,1] and sum to 1.
void validate(const Scenario& s);

// Per-model patient means for each outcome, in first-appearance model order.
struct ModelOutcomes {
  std::vector<std::string> models;
  std::vector<OutcomeRow> means;
};
ModelOutcomes model_outcome_means(const std::vector<MetricRecord>& records, bool exclude_oedema_only = true);

// Min-max normalization across models of one column (NaN entries ignored).
// A column that is constant over the present models carries no ranking
// information and yields NaN for everyone.
std::vector<double> minmax_column(const std::vector<double>& column);

// Orients lower-is-better outcomes, normalizes each across models and
// averages the outcomes present for each model. A model with no informative
// outcome scores 0.5. Throws InsufficientModels for fewer than two models.
std::vector<double> performance_scores(const std::vector<OutcomeRow>& means);

// 1 - mean normalized inequality over the 196 cells.
std::vector<double> equity_scores(const std::vector<InequalityRow>& cells);

// Ranks 1..K by descending score, ties broken by model id.
std::vector<int> rank_descending(const std::vector<double>& scores, const std::vector<std::string>& models);

struct LeagueEntry {
  std::string model_id;
  double perf_score;
  double equity_score;
  int perf_rank;
  int equity_rank;
  std::vector<double> composite_scores;
  std::vector<int> composite_ranks;
};

struct LeagueTable {
  std::vector<Scenario> scenarios;
  std::vector<LeagueEntry> entries;

  CsvTable to_csv() const;
  std::string to_json() const;
};

LeagueTable composite_table(const std::vector<std::string>& models, const std::vector<double>& perf,
                            const std::vector<double>& equity,
                            const std::vector<Scenario>& scenarios = kDefaultScenarios);

}  // namespace fairboard::league
