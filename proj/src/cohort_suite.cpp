#include "fairboard/cohort_suite.hpp"

#include <cmath>
#include <map>

#include "fairboard/error.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::lme {

std::vector<std::size_t> default_cohort_outcomes() {
  std::vector<std::size_t> out;
  for (auto c : kCompartments)
    for (auto m : {Metric::Dice, Metric::Sensitivity, Metric::Precision, Metric::Hd95}) out.push_back(outcome_index(c, m));
  return out;
}

namespace {

std::vector<std::string> predictor_names(const stats::PredictorSpec& spec) {
  std::vector<std::string> names;
  for (const auto& t : spec.terms) {
    if (t.kind == stats::Term::Kind::Categorical) {
      for (const auto& l : t.levels) names.push_back(t.name + "[" + l + "]");
    } else {
      names.push_back(t.name);
    }
  }
  return names;
}

LmeFit fit_outcome(std::size_t outcome, const std::vector<MetricRecord>& records, const std::vector<CohortRow>& cohort,
                   const stats::DesignMatrix& design, const CohortSuiteOptions& options) {
  std::map<std::string, Eigen::Index> design_row;
  for (std::size_t r = 0; r < design.rows.size(); ++r)
    design_row[cohort[design.rows[r]].patient_id] = static_cast<Eigen::Index>(r);

  std::vector<double> y;
  std::vector<Eigen::Index> xr;
  std::vector<std::string> pids, mids;
  for (const auto& rec : records) {
    if (options.exclude_oedema_only && rec.gt_oedema_only) continue;
    const double v = rec.values[outcome];
    if (!std::isfinite(v)) continue;
    auto it = design_row.find(rec.patient_id);
    if (it == design_row.end()) continue;
    y.push_back(v);
    xr.push_back(it->second);
    pids.push_back(rec.patient_id);
    mids.push_back(rec.model_id);
  }
  if (y.empty()) throw Error(ErrorCode::EmptyInput, "no observations for " + outcome_name(outcome));
  y = stats::zscore(y);
  Eigen::MatrixXd full(static_cast<Eigen::Index>(y.size()), design.x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) full.row(static_cast<Eigen::Index>(i)) = design.x.row(xr[i]);
  // Dummy levels aliased with earlier columns in this outcome's rows are dropped.
  std::vector<Eigen::Index> keep;
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < full.cols(); ++j) {
    const auto& name = design.names[static_cast<std::size_t>(j)];
    if (!name.empty() && name.back() == ']') {
      Eigen::MatrixXd trial(full.rows(), static_cast<Eigen::Index>(keep.size()) + 1);
      for (std::size_t k = 0; k < keep.size(); ++k) trial.col(static_cast<Eigen::Index>(k)) = full.col(keep[k]);
      trial.col(trial.cols() - 1) = full.col(j);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
      qr.setThreshold(1e-10);
      if (qr.rank() < trial.cols()) continue;
    }
    keep.push_back(j);
    names.push_back(name);
  }
  Eigen::MatrixXd x(full.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = full.col(keep[k]);
  return fit_crossed_lme(y, x, names, pids, mids, options.lme);
}

}  // namespace

CohortSuiteResult run_cohort_suite(const std::vector<MetricRecord>& records, const std::vector<CohortRow>& cohort,
                                   const CohortSuiteOptions& options) {
  CohortSuiteResult result;
  const auto design = stats::build_design(cohort, options.predictors);
  const auto terms = predictor_names(options.predictors);

  for (std::size_t o : options.outcomes) {
    DvFit f;
    f.dv = outcome_name(o);
    try {
      f.fit = fit_outcome(o, records, cohort, design, options);
    } catch (const Error& e) {
      f.error = e.what();
    }
    result.fits.push_back(std::move(f));
  }

  std::map<std::string, std::vector<double>> pvals_by_term;
  for (const auto& f : result.fits) {
    for (const auto& term : terms) {
      CoefficientRow row{f.dv, term, kMissing, kMissing, kMissing, false};
      if (f.fit) {
        for (std::size_t j = 0; j < f.fit->terms.size(); ++j) {
          if (f.fit->terms[j] != term) continue;
          row.beta = f.fit->beta(static_cast<Eigen::Index>(j));
          row.se = f.fit->se(static_cast<Eigen::Index>(j));
          row.p = f.fit->pvals(static_cast<Eigen::Index>(j));
        }
      }
      pvals_by_term[term].push_back(row.p);
      result.coefficients.push_back(row);
    }
  }
  for (const auto& term : terms) {
    const auto fdr = stats::bh_fdr(pvals_by_term[term], options.alpha);
    std::size_t k = 0;
    for (auto& row : result.coefficients)
      if (row.term == term) row.fdr_significant = fdr.significant[k++];
  }
  return result;
}

CsvTable CohortSuiteResult::coefficient_table() const {
  CsvTable t;
  t.header = {"dv", "term", "beta", "se", "p", "fdr_significant"};
  for (const auto& r : coefficients)
    t.rows.push_back({r.dv, r.term, format_number(r.beta), format_number(r.se), format_number(r.p),
                      r.fdr_significant ? "1" : "0"});
  return t;
}

CsvTable CohortSuiteResult::variance_table() const {
  CsvTable t;
  t.header = {"dv",         "n_obs",        "n_patients",  "n_models",      "var_patient",   "var_model",
              "var_resid",  "icc_patient",  "icc_model",   "r2_marginal",   "r2_conditional", "converged",
              "reml_deviance", "error"};
  for (const auto& f : fits) {
    if (!f.fit) {
      std::vector<std::string> row{f.dv};
      row.resize(t.header.size() - 1);
      row.push_back(f.error);
      t.rows.push_back(std::move(row));
      continue;
    }
    const auto& m = *f.fit;
    t.rows.push_back({f.dv, std::to_string(m.n_obs), std::to_string(m.n_patients), std::to_string(m.n_models),
                      format_number(m.var_patient), format_number(m.var_model), format_number(m.var_resid),
                      format_number(m.icc_patient), format_number(m.icc_model), format_number(m.r2_marginal),
                      format_number(m.r2_conditional), m.converged ? "1" : "0", format_number(m.reml_deviance), ""});
  }
  return t;
}

}  // namespace fairboard::lme
