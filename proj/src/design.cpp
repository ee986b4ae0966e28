#include "fairboard/design.hpp"

#include <cmath>

#include "fairboard/error.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::stats {

Term Term::categorical(std::string name, std::string reference, std::vector<std::string> levels,
                       std::function<std::optional<std::string>(const CohortRow&, std::size_t)> accessor) {
  Term t;
  t.name = std::move(name);
  t.kind = Kind::Categorical;
  t.reference = std::move(reference);
  t.levels = std::move(levels);
  t.level_of = std::move(accessor);
  return t;
}

Term Term::continuous(std::string name, std::function<std::optional<double>(const CohortRow&, std::size_t)> accessor,
                      bool standardize) {
  Term t;
  t.name = std::move(name);
  t.kind = Kind::Continuous;
  t.standardize = standardize;
  t.value_of = std::move(accessor);
  return t;
}

namespace {

std::optional<std::string> nonempty(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

Term PredictorSpec::sex() {
  return Term::categorical("Sex", "F", {"M"}, [](const CohortRow& r, std::size_t) { return nonempty(r.sex); });
}
Term PredictorSpec::age() {
  return Term::continuous("Age", [](const CohortRow& r, std::size_t) { return r.age_years; });
}
Term PredictorSpec::source() {
  return Term::categorical("Source", "UCSF-PDGM", {"UPENN-GBM"},
                           [](const CohortRow& r, std::size_t) { return nonempty(r.source); });
}
Term PredictorSpec::grade() {
  return Term::categorical("Grade", "2", {"3", "4"}, [](const CohortRow& r, std::size_t) -> std::optional<std::string> {
    if (!r.who_grade) return std::nullopt;
    return std::to_string(*r.who_grade);
  });
}
Term PredictorSpec::resection() {
  return Term::categorical("Resection", "GTR", {"STR", "Biopsy"},
                           [](const CohortRow& r, std::size_t) { return nonempty(r.resection); });
}
Term PredictorSpec::diagnosis() {
  return Term::categorical("Diagnosis", "GBM", {"Non-GBM"},
                           [](const CohortRow& r, std::size_t) { return diagnosis_class(r); });
}
Term PredictorSpec::survival() {
  return Term::continuous("Survival", [](const CohortRow& r, std::size_t) { return r.survival_days; });
}

PredictorSpec PredictorSpec::cohort_layout() {
  return PredictorSpec{{sex(), age(), source(), grade(), resection(), diagnosis()}, true};
}

std::optional<Eigen::Index> DesignMatrix::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  return std::nullopt;
}

Eigen::Index DesignMatrix::require_column(const std::string& name) const {
  auto c = column(name);
  if (!c) throw Error(ErrorCode::InvalidArgument, "design has no column '" + name + "'");
  return *c;
}

void require_full_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  std::string constant;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (names[static_cast<std::size_t>(j)] == "Intercept") continue;
    if (x.rows() > 0 && (x.col(j).array() == x(0, j)).all()) constant += " " + names[static_cast<std::size_t>(j)];
  }
  if (!constant.empty()) throw Error(ErrorCode::RankDeficient, "constant design column(s):" + constant);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols())
    throw Error(ErrorCode::RankDeficient, "design rank " + std::to_string(qr.rank()) + " < " + std::to_string(x.cols()) +
                                              " columns");
}

DesignMatrix build_design(const std::vector<CohortRow>& rows, const PredictorSpec& spec) {
  DesignMatrix d;
  if (spec.intercept) d.names.push_back("Intercept");
  for (const auto& t : spec.terms) {
    if (t.kind == Term::Kind::Categorical) {
      d.reference_levels[t.name] = t.reference;
      for (const auto& l : t.levels) d.names.push_back(t.name + "[" + l + "]");
    } else {
      d.names.push_back(t.name);
    }
  }

  std::vector<std::vector<double>> cells;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> row;
    if (spec.intercept) row.push_back(1.0);
    bool complete = true;
    for (const auto& t : spec.terms) {
      if (t.kind == Term::Kind::Categorical) {
        const auto level = t.level_of(rows[i], i);
        if (!level) {
          complete = false;
          break;
        }
        bool known = *level == t.reference;
        for (const auto& l : t.levels) {
          row.push_back(*level == l ? 1.0 : 0.0);
          known = known || *level == l;
        }
        if (!known)
          throw Error(ErrorCode::UnknownLevel, "level '" + *level + "' of " + t.name + " for patient " + rows[i].patient_id);
      } else {
        const auto v = t.value_of(rows[i], i);
        if (!v || !std::isfinite(*v)) {
          complete = false;
          break;
        }
        row.push_back(*v);
      }
    }
    if (!complete) {
      ++d.dropped;
      continue;
    }
    d.rows.push_back(i);
    cells.push_back(std::move(row));
  }

  d.x.resize(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(d.names.size()));
  for (std::size_t r = 0; r < cells.size(); ++r)
    for (std::size_t c = 0; c < d.names.size(); ++c) d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cells[r][c];

  Eigen::Index col = spec.intercept ? 1 : 0;
  for (const auto& t : spec.terms) {
    if (t.kind == Term::Kind::Categorical) {
      col += static_cast<Eigen::Index>(t.levels.size());
      continue;
    }
    if (t.standardize && d.x.rows() > 0) {
      std::vector<double> v(d.x.col(col).data(), d.x.col(col).data() + d.x.rows());
      const auto z = zscore(v);
      for (Eigen::Index r = 0; r < d.x.rows(); ++r) d.x(r, col) = z[static_cast<std::size_t>(r)];
    }
    ++col;
  }
  if (spec.drop_absent_levels) {
    std::vector<Eigen::Index> keep;
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
      const auto& nm = d.names[static_cast<std::size_t>(j)];
      if (nm.back() == ']' && d.x.rows() > 0 && (d.x.col(j).array() == 0.0).all()) {
        d.absent_levels.push_back(nm);
        continue;
      }
      keep.push_back(j);
      names.push_back(nm);
    }
    if (!d.absent_levels.empty()) {
      Eigen::MatrixXd x(d.x.rows(), static_cast<Eigen::Index>(keep.size()));
      for (std::size_t k = 0; k < keep.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = d.x.col(keep[k]);
      d.x = std::move(x);
      d.names = std::move(names);
    }
  }
  if (d.x.rows() < d.x.cols())
    throw Error(ErrorCode::RankDeficient, "fewer complete rows than design columns");
  require_full_rank(d.x, d.names);
  return d;
}

}  // namespace fairboard::stats
