#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairboard/cohort.hpp"

namespace fairboard::stats {

// One conceptual predictor. Categorical terms expand to one 0/1 column per
// non-reference level, named "Name[level]"; continuous terms give one column,
// z-scored over the retained rows unless standardize is false.
struct Term {
  enum class Kind { Categorical, Continuous };

  std::string name;
  Kind kind = Kind::Continuous;
  std::string reference;
  std::vector<std::string> levels;
  bool standardize = true;
  // Accessors receive the row and its index in the cohort vector.
  std::function<std::optional<std::string>(const CohortRow&, std::size_t)> level_of;
  std::function<std::optional<double>(const CohortRow&, std::size_t)> value_of;

  static Term categorical(std::string name, std::string reference, std::vector<std::string> levels,
                          std::function<std::optional<std::string>(const CohortRow&, std::size_t)> accessor);
  static Term continuous(std::string name, std::function<std::optional<double>(const CohortRow&, std::size_t)> accessor,
                         bool standardize = true);
};

struct PredictorSpec {
  std::vector<Term> terms;
  bool intercept = true;
  // Remove dummy columns of levels absent from the retained rows.
  bool drop_absent_levels = false;

  static Term sex();
  static Term age();
  static Term source();
  static Term grade();
  static Term resection();
  static Term diagnosis();
  static Term survival();

  // Intercept + Sex[M], Age, Source[UPENN-GBM], Grade[3], Grade[4],
  // Resection[STR], Resection[Biopsy], Diagnosis[Non-GBM].
  static PredictorSpec cohort_layout();
};

struct DesignMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd x;
  // Cohort row index behind each design row.
  std::vector<std::size_t> rows;
  // Rows dropped for missing covariates.
  std::size_t dropped = 0;
  std::map<std::string, std::string> reference_levels;
  // Dummy columns removed because their level never occurs.
  std::vector<std::string> absent_levels;

  Eigen::Index cols() const { return x.cols(); }
  std::optional<Eigen::Index> column(const std::string& name) const;
  Eigen::Index require_column(const std::string& name) const;
};

// Complete-case design. Throws UnknownLevel for undeclared levels and
// RankDeficient (naming the offending columns) when x lacks full column rank.
DesignMatrix build_design(const std::vector<CohortRow>& rows, const PredictorSpec& spec);

void require_full_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names);

}  // namespace fairboard::stats
