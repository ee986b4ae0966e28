#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fairboard/cohort_suite.hpp"
#include "fairboard/error.hpp"
#include "fairboard/lme.hpp"
#include "fairboard/rng.hpp"

using namespace fairboard;
using namespace fairboard::lme;
using doctest::Approx;

namespace {

struct Crossed {
  std::vector<double> y;
  Eigen::MatrixXd x;
  std::vector<std::string> pid, mid;
  std::vector<int> pl, ml;
  int np = 0, nm = 0;
};

Crossed simulate(Rng& rng, int np, int nm, double vp, double vm, double ve, double beta_age) {
  Crossed c;
  c.np = np;
  c.nm = nm;
  std::vector<double> up(static_cast<std::size_t>(np)), um(static_cast<std::size_t>(nm)), age(static_cast<std::size_t>(np));
  for (auto& u : up) u = rng.normal(0, std::sqrt(vp));
  for (auto& u : um) u = rng.normal(0, std::sqrt(vm));
  for (auto& a : age) a = rng.normal();
  const int n = np * nm;
  c.x.resize(n, 2);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nm; ++j) {
      const int r = i * nm + j;
      c.x(r, 0) = 1.0;
      c.x(r, 1) = age[static_cast<std::size_t>(i)];
      c.y.push_back(beta_age * age[static_cast<std::size_t>(i)] + up[static_cast<std::size_t>(i)] +
                    um[static_cast<std::size_t>(j)] + rng.normal(0, std::sqrt(ve)));
      c.pid.push_back("P" + std::to_string(i));
      c.mid.push_back("M" + std::to_string(j));
      c.pl.push_back(i);
      c.ml.push_back(j);
    }
  return c;
}

// Profiled REML deviance from the dense marginal covariance.
double dense_deviance(const Crossed& c, double ta, double tb, Eigen::VectorXd* beta_out = nullptr) {
  const auto n = static_cast<Eigen::Index>(c.y.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (c.pl[static_cast<std::size_t>(i)] == c.pl[static_cast<std::size_t>(j)]) h(i, j) += ta * ta;
      if (c.ml[static_cast<std::size_t>(i)] == c.ml[static_cast<std::size_t>(j)]) h(i, j) += tb * tb;
    }
  const Eigen::Map<const Eigen::VectorXd> y(c.y.data(), n);
  const Eigen::LDLT<Eigen::MatrixXd> hl(h);
  const Eigen::MatrixXd hx = hl.solve(c.x);
  const Eigen::MatrixXd xhx = c.x.transpose() * hx;
  const Eigen::VectorXd beta = xhx.ldlt().solve(hx.transpose() * y);
  const Eigen::VectorXd r = y - c.x * beta;
  const double pwrss = r.dot(hl.solve(r));
  const double dfr = static_cast<double>(n - c.x.cols());
  if (beta_out) *beta_out = beta;
  const double logdet = hl.vectorD().array().log().sum() + xhx.ldlt().vectorD().array().log().sum();
  return logdet + dfr * (1.0 + std::log(2.0 * std::numbers::pi * pwrss / dfr));
}

}  // namespace

TEST_CASE("ICC and R2") {
  const auto i = icc({0.5, 0.3, 0.2});
  CHECK(i.patient == Approx(0.5));
  CHECK(i.model == Approx(0.3));
  const auto z = icc({0, 0, 0});
  CHECK(z.patient == 0.0);
  Eigen::MatrixXd x(4, 2);
  x << 1, -1, 1, 0, 1, 1, 1, 2;
  const auto r0 = r2_nakagawa({0.5, 0.3, 0.2}, x, Eigen::Vector2d(3.0, 0.0));
  CHECK(r0.marginal == 0.0);
  CHECK(r0.conditional == Approx(0.8));
  const auto r1 = r2_nakagawa({0.5, 0.3, 0.2}, x, Eigen::Vector2d(0.0, 1.0));
  const double vf = 1.25;
  CHECK(r1.marginal == Approx(vf / (vf + 1.0)));
  CHECK(r1.conditional == Approx((vf + 0.8) / (vf + 1.0)));
  CHECK(r1.marginal <= r1.conditional);
}

TEST_CASE("sparse REML criterion matches the dense oracle") {
  Rng rng(4);
  const auto c = simulate(rng, 12, 5, 1.0, 0.3, 0.5, 0.2);
  const CrossedReml reml(c.y, c.x, c.pl, c.np, c.ml, c.nm);
  for (auto [ta, tb] : {std::pair{0.0, 0.0}, std::pair{1.3, 0.4}, std::pair{0.2, 2.5}, std::pair{3.0, 0.0}}) {
    Eigen::VectorXd beta;
    const double d = dense_deviance(c, ta, tb, &beta);
    const auto s = reml.solve(ta, tb);
    CHECK(s.deviance == Approx(d).epsilon(1e-9));
    CHECK((s.beta - beta).norm() < 1e-9);
  }
}

TEST_CASE("recovers variance components") {
  Rng rng(21);
  const auto c = simulate(rng, 150, 8, 1.0, 0.25, 0.25, 0.3);
  const auto fit = fit_crossed_lme(c.y, c.x, {"Intercept", "Age"}, c.pid, c.mid);
  CHECK(fit.converged);
  CHECK(fit.var_patient == Approx(1.0).epsilon(0.25));
  CHECK(fit.var_resid == Approx(0.25).epsilon(0.1));
  CHECK(fit.var_model > 0.05);
  CHECK(fit.beta(1) == Approx(0.3).epsilon(0.1 / 0.3));
  CHECK(fit.n_patients == 150);
  CHECK(fit.n_models == 8);
  CHECK(fit.icc_patient == Approx(fit.var_patient / (fit.var_patient + fit.var_model + fit.var_resid)));
  CHECK(fit.r2_marginal <= fit.r2_conditional);

  // Optimum is a local minimum of the criterion.
  const CrossedReml reml(c.y, c.x, c.pl, c.np, c.ml, c.nm);
  const double ta = std::sqrt(fit.var_patient / fit.var_resid), tb = std::sqrt(fit.var_model / fit.var_resid);
  for (double da : {-0.02, 0.02})
    for (double db : {-0.02, 0.02}) CHECK(reml.deviance(ta + da, tb + db) >= fit.reml_deviance - 1e-9);

  for (std::size_t s = 0; s < fit.restarts.size(); ++s) {
    const std::size_t end = s + 1 < fit.restarts.size() ? fit.restarts[s + 1] : fit.trace.size();
    for (std::size_t k = fit.restarts[s] + 1; k < end; ++k) CHECK(fit.trace[k] <= fit.trace[k - 1]);
  }
}

TEST_CASE("boundary fit when a component is absent") {
  Rng rng(9);
  auto c = simulate(rng, 60, 6, 1.0, 0.0, 0.5, 0.0);
  // Remove any realised model effect so the optimum sits on the boundary.
  std::vector<double> mmean(6, 0.0);
  for (std::size_t k = 0; k < c.y.size(); ++k) mmean[static_cast<std::size_t>(c.ml[k])] += c.y[k] / 60.0;
  double grand = 0.0;
  for (double m : mmean) grand += m / 6.0;
  for (std::size_t k = 0; k < c.y.size(); ++k) c.y[k] -= mmean[static_cast<std::size_t>(c.ml[k])] - grand;
  const auto fit = fit_crossed_lme(c.y, c.x, {"Intercept", "Age"}, c.pid, c.mid);
  CHECK(fit.var_model == 0.0);
  CHECK(fit.var_patient > 0.5);
  CHECK(fit.icc_model == 0.0);
}

TEST_CASE("no group structure gives the OLS coefficients") {
  Rng rng(13);
  auto c = simulate(rng, 30, 5, 0.0, 0.0, 1.0, 0.0);
  Eigen::Map<Eigen::VectorXd> y(c.y.data(), static_cast<Eigen::Index>(c.y.size()));
  // Two-way centre the noise so no patient or model effect is present.
  Eigen::MatrixXd e(30, 5);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 5; ++j) e(i, j) = y(i * 5 + j);
  const Eigen::VectorXd rmean = e.rowwise().mean();
  const Eigen::RowVectorXd cmean = e.colwise().mean();
  const double g = e.mean();
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 5; ++j) y(i * 5 + j) = e(i, j) - rmean(i) - cmean(j) + g;
  // Add a fixed effect on a covariate that varies within patients.
  Eigen::MatrixXd x(150, 2);
  for (int r = 0; r < 150; ++r) {
    x(r, 0) = 1.0;
    x(r, 1) = rng.normal();
  }
  // Make the covariate itself free of group means so the fit stays at zero.
  Eigen::MatrixXd xc(30, 5);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 5; ++j) xc(i, j) = x(i * 5 + j, 1);
  const Eigen::VectorXd xr = xc.rowwise().mean();
  const Eigen::RowVectorXd xcm = xc.colwise().mean();
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 5; ++j) x(i * 5 + j, 1) = xc(i, j) - xr(i) - xcm(j) + xc.mean();
  y += 0.4 * x.col(1);
  const auto fit = fit_crossed_lme(c.y, x, {"Intercept", "X"}, c.pid, c.mid);
  const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(y);
  CHECK(fit.var_patient == 0.0);
  CHECK(fit.var_model == 0.0);
  CHECK((fit.beta - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("relabelling groups leaves the fit unchanged") {
  Rng rng(33);
  const auto c = simulate(rng, 40, 5, 0.8, 0.2, 0.4, 0.25);
  const auto a = fit_crossed_lme(c.y, c.x, {"Intercept", "Age"}, c.pid, c.mid);
  std::vector<std::string> pid(c.pid), mid(c.mid);
  for (auto& p : pid) p = "zz" + std::to_string(1000 - std::stoi(p.substr(1)));
  for (auto& m : mid) m = std::string("model_") + static_cast<char>('e' - (m[1] - '0'));
  const auto b = fit_crossed_lme(c.y, c.x, {"Intercept", "Age"}, pid, mid);
  CHECK(b.var_patient == Approx(a.var_patient).epsilon(1e-6));
  CHECK(b.var_model == Approx(a.var_model).epsilon(1e-6));
  CHECK(b.var_resid == Approx(a.var_resid).epsilon(1e-6));
  CHECK(std::fabs(b.beta(1) - a.beta(1)) < 1e-6);
}

TEST_CASE("input validation") {
  Rng rng(1);
  const auto c = simulate(rng, 5, 3, 1, 1, 1, 0);
  std::vector<std::string> one(c.mid.size(), "only");
  CHECK_THROWS_AS(fit_crossed_lme(c.y, c.x, {"Intercept", "Age"}, c.pid, one), Error);
  Eigen::MatrixXd dup(c.x.rows(), 2);
  dup.col(0) = c.x.col(0);
  dup.col(1) = 2.0 * c.x.col(0);
  try {
    fit_crossed_lme(c.y, dup, {"a", "b"}, c.pid, c.mid);
    FAIL("expected SingularDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
  auto y = c.y;
  y[0] = NAN;
  CHECK(fit_crossed_lme(y, c.x, {"Intercept", "Age"}, c.pid, c.mid).n_obs == c.y.size() - 1);
}

TEST_CASE("cohort suite recovers a planted biopsy effect") {
  Rng rng(77);
  std::vector<CohortRow> cohort;
  for (int i = 0; i < 150; ++i) {
    CohortRow r;
    r.patient_id = "P" + std::to_string(i);
    r.sex = rng.uniform() < 0.5 ? "M" : "F";
    r.age_years = std::round(rng.normal(55, 12));
    r.source = rng.uniform() < 0.6 ? "UCSF-PDGM" : "UPENN-GBM";
    const bool gbm = rng.uniform() < 0.6;
    r.who_grade = gbm ? 4 : 2 + static_cast<int>(rng.index(3));
    r.diagnosis = gbm ? kGbmDiagnosis : "Astrocytoma, IDH-mutant";
    const double u = rng.uniform();
    r.resection = u < 0.5 ? "GTR" : u < 0.75 ? "STR" : "Biopsy";
    cohort.push_back(r);
  }
  const std::vector<std::string> models{"m1", "m2", "m3"};
  std::vector<MetricRecord> records;
  for (const auto& r : cohort) {
    std::array<double, kOutcomeCount> pe{};
    for (auto& v : pe) v = rng.normal(0, 0.5);
    for (std::size_t m = 0; m < models.size(); ++m) {
      MetricRecord rec;
      rec.patient_id = r.patient_id;
      rec.model_id = models[m];
      for (std::size_t o = 0; o < kOutcomeCount; ++o) rec.values[o] = 0.1 * static_cast<double>(m) + pe[o] + rng.normal(0, 0.5);
      // Biopsy lowers WT dice by half a pooled SD.
      if (r.resection == "Biopsy") rec.at(Compartment::WT, Metric::Dice) -= 0.5 * std::sqrt(0.25 + 0.25 + 0.01);
      records.push_back(rec);
    }
  }
  const auto res = run_cohort_suite(records, cohort);
  CHECK(res.fits.size() == 16);
  CHECK(res.coefficients.size() == 128);
  CHECK(res.coefficient_table().rows.size() == 128);
  bool found = false;
  for (const auto& row : res.coefficients)
    if (row.dv == "WT_dice" && row.term == "Resection[Biopsy]") {
      found = true;
      CHECK(row.beta < 0.0);
      CHECK(row.beta == Approx(-0.5).epsilon(0.5));
      CHECK(row.fdr_significant);
    }
  CHECK(found);
  for (const auto& f : res.fits) CHECK(f.fit.has_value());
}
