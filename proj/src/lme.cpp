#include "fairboard/lme.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "fairboard/error.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::lme {

Icc icc(const VarianceComponents& v) {
  const double total = v.patient + v.model + v.residual;
  if (!(total > 0.0)) return {0.0, 0.0};
  return {v.patient / total, v.model / total};
}

R2 r2_nakagawa(const VarianceComponents& v, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  const double var_fixed = eta.size() > 0 ? (eta.array() - eta.mean()).square().mean() : 0.0;
  const double total = var_fixed + v.patient + v.model + v.residual;
  if (!(total > 0.0)) return {0.0, 0.0};
  return {var_fixed / total, (var_fixed + v.patient + v.model) / total};
}

CrossedReml::CrossedReml(std::span<const double> y, const Eigen::MatrixXd& x, std::span<const int> level_a,
                         int n_levels_a, std::span<const int> level_b, int n_levels_b)
    : n_(x.rows()), p_(x.cols()), la_(n_levels_a), lb_(n_levels_b) {
  na_ = Eigen::VectorXd::Zero(la_);
  nb_ = Eigen::VectorXd::Zero(lb_);
  za_x_ = Eigen::MatrixXd::Zero(la_, p_);
  za_zb_ = Eigen::MatrixXd::Zero(la_, lb_);
  zb_x_ = Eigen::MatrixXd::Zero(lb_, p_);
  za_y_ = Eigen::VectorXd::Zero(la_);
  zb_y_ = Eigen::VectorXd::Zero(lb_);
  xtx_ = x.transpose() * x;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  xty_ = x.transpose() * yv;
  yty_ = yv.squaredNorm();
  for (Eigen::Index i = 0; i < n_; ++i) {
    const int a = level_a[static_cast<std::size_t>(i)], b = level_b[static_cast<std::size_t>(i)];
    na_(a) += 1.0;
    nb_(b) += 1.0;
    za_x_.row(a) += x.row(i);
    zb_x_.row(b) += x.row(i);
    za_zb_(a, b) += 1.0;
    za_y_(a) += yv(i);
    zb_y_(b) += yv(i);
  }
}

CrossedReml::Solution CrossedReml::solve(double theta_a, double theta_b) const {
  const Eigen::Index m = lb_ + p_;
  const Eigen::VectorXd a = (theta_a * theta_a) * na_.array() + 1.0;
  const Eigen::VectorXd a_inv = a.cwiseInverse();

  Eigen::MatrixXd b1(la_, m);
  b1.leftCols(lb_) = (theta_a * theta_b) * za_zb_;
  b1.rightCols(p_) = theta_a * za_x_;

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  s.topLeftCorner(lb_, lb_).diagonal() = (theta_b * theta_b) * nb_.array() + 1.0;
  s.topRightCorner(lb_, p_) = theta_b * zb_x_;
  s.bottomLeftCorner(p_, lb_) = theta_b * zb_x_.transpose();
  s.bottomRightCorner(p_, p_) = xtx_;
  s.noalias() -= b1.transpose() * a_inv.asDiagonal() * b1;

  const Eigen::VectorXd r1 = theta_a * za_y_;
  Eigen::VectorXd r2(m);
  r2.head(lb_) = theta_b * zb_y_;
  r2.tail(p_) = xty_;

  Solution sol;
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    sol.deviance = std::numeric_limits<double>::infinity();
    sol.pwrss = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }
  const Eigen::VectorXd x2 = llt.solve(r2 - b1.transpose() * a_inv.cwiseProduct(r1));
  const Eigen::VectorXd x1 = a_inv.cwiseProduct(r1 - b1 * x2);
  sol.pwrss = yty_ - r1.dot(x1) - r2.dot(x2);
  sol.beta = x2.tail(p_);
  const Eigen::MatrixXd s_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  sol.beta_cov_unscaled = s_inv.bottomRightCorner(p_, p_);

  double logdet = a.array().log().sum();
  const Eigen::MatrixXd l = llt.matrixL();
  logdet += 2.0 * l.diagonal().array().log().sum();
  const double dfr = residual_df();
  if (!(sol.pwrss > 0.0)) {
    sol.deviance = -std::numeric_limits<double>::infinity();
    return sol;
  }
  sol.deviance = logdet + dfr * (1.0 + std::log(2.0 * std::numbers::pi * sol.pwrss / dfr));
  return sol;
}

namespace {

struct SimplexResult {
  std::array<double, 2> x;
  double f;
  bool converged;
};

// Nelder-Mead on the two relative standard deviations. The criterion depends
// only on theta^2, so the unconstrained search is equivalent to theta >= 0.
template <class F>
SimplexResult nelder_mead(F&& f, std::array<double, 2> start, double step, const LmeOptions& opt,
                          std::vector<double>& trace) {
  std::array<std::array<double, 2>, 3> pts{start, start, start};
  pts[1][0] += step;
  pts[2][1] += step;
  std::array<double, 3> fv{f(pts[0]), f(pts[1]), f(pts[2])};
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return fv[static_cast<std::size_t>(i)] < fv[static_cast<std::size_t>(j)]; });
    const auto best = static_cast<std::size_t>(idx[0]), mid = static_cast<std::size_t>(idx[1]),
               worst = static_cast<std::size_t>(idx[2]);
    trace.push_back(fv[best]);

    double spread = 0.0;
    for (int k = 0; k < 2; ++k)
      spread = std::max({spread, std::fabs(pts[mid][static_cast<std::size_t>(k)] - pts[best][static_cast<std::size_t>(k)]),
                         std::fabs(pts[worst][static_cast<std::size_t>(k)] - pts[best][static_cast<std::size_t>(k)])});
    if (std::fabs(fv[worst] - fv[best]) <= opt.ftol * (1.0 + std::fabs(fv[best])) && spread <= opt.xtol) {
      converged = true;
      break;
    }

    std::array<double, 2> centroid{};
    for (int k = 0; k < 2; ++k)
      centroid[static_cast<std::size_t>(k)] = 0.5 * (pts[best][static_cast<std::size_t>(k)] + pts[mid][static_cast<std::size_t>(k)]);
    auto along = [&](double c) {
      std::array<double, 2> p{};
      for (std::size_t k = 0; k < 2; ++k) p[k] = centroid[k] + c * (pts[worst][k] - centroid[k]);
      return p;
    };

    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[best]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[mid]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i : {mid, worst}) {
      for (std::size_t k = 0; k < 2; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      fv[i] = f(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {{std::fabs(pts[best][0]), std::fabs(pts[best][1])}, fv[best], converged};
}

std::vector<int> encode_levels(std::span<const std::string> ids, int& n_levels) {
  std::map<std::string, int> index;
  for (const auto& id : ids) index.emplace(id, 0);
  int k = 0;
  for (auto& [id, v] : index) v = k++;
  n_levels = k;
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(index.at(id));
  return out;
}

}  // namespace

LmeFit fit_crossed_lme(std::span<const double> y_in, const Eigen::MatrixXd& x_in, const std::vector<std::string>& terms,
                       std::span<const std::string> patient_ids, std::span<const std::string> model_ids,
                       const LmeOptions& options) {
  const std::size_t n_in = y_in.size();
  if (static_cast<std::size_t>(x_in.rows()) != n_in || patient_ids.size() != n_in || model_ids.size() != n_in)
    throw Error(ErrorCode::InvalidArgument, "y, x and grouping ids must have the same length");
  if (terms.size() != static_cast<std::size_t>(x_in.cols()))
    throw Error(ErrorCode::InvalidArgument, "one term name per design column required");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n_in; ++i)
    if (std::isfinite(y_in[i])) keep.push_back(i);
  const auto n = static_cast<Eigen::Index>(keep.size());
  const Eigen::Index p = x_in.cols();
  std::vector<double> y(keep.size());
  Eigen::MatrixXd x(n, p);
  std::vector<std::string> pid(keep.size()), mid(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    y[k] = y_in[keep[k]];
    x.row(static_cast<Eigen::Index>(k)) = x_in.row(static_cast<Eigen::Index>(keep[k]));
    pid[k] = patient_ids[keep[k]];
    mid[k] = model_ids[keep[k]];
  }

  LmeFit fit;
  fit.terms = terms;
  fit.n_obs = keep.size();
  int n_pat = 0, n_mod = 0;
  const auto pat_level = encode_levels(pid, n_pat);
  const auto mod_level = encode_levels(mid, n_mod);
  fit.n_patients = static_cast<std::size_t>(n_pat);
  fit.n_models = static_cast<std::size_t>(n_mod);
  if (n_pat < 2 || n_mod < 2) throw Error(ErrorCode::TooFewValues, "each grouping factor needs at least two levels");
  if (n <= p) throw Error(ErrorCode::SingularDesign, "not enough observations for the fixed effects");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw Error(ErrorCode::SingularDesign, "fixed-effect design is rank deficient");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd beta_ols = qr.solve(yv);
  const double rss_ols = (yv - x * beta_ols).squaredNorm();
  if (rss_ols <= 1e-20 * std::max(yv.squaredNorm(), std::numeric_limits<double>::min())) {
    // Noise-free fixed-effect fit: every variance component is zero.
    fit.beta = beta_ols;
    fit.se = Eigen::VectorXd::Zero(p);
    fit.pvals.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) fit.pvals(j) = beta_ols(j) == 0.0 ? 1.0 : 0.0;
    fit.converged = true;
    fit.reml_deviance = -std::numeric_limits<double>::infinity();
    const R2 r2 = r2_nakagawa({}, x, fit.beta);
    fit.r2_marginal = r2.marginal;
    fit.r2_conditional = r2.conditional;
    return fit;
  }

  // The factor with more levels becomes the diagonal block.
  const bool patients_first = n_pat >= n_mod;
  const CrossedReml reml(y, x, patients_first ? pat_level : mod_level, patients_first ? n_pat : n_mod,
                         patients_first ? mod_level : pat_level, patients_first ? n_mod : n_pat);
  auto objective = [&](const std::array<double, 2>& t) { return reml.deviance(t[0], t[1]); };

  SimplexResult best{{0.0, 0.0}, std::numeric_limits<double>::infinity(), false};
  for (double r : options.start_ratios) {
    const double t0 = std::sqrt(r);
    fit.restarts.push_back(fit.trace.size());
    const SimplexResult res = nelder_mead(objective, {t0, t0}, std::max(0.5 * t0, 0.05), options, fit.trace);
    if (res.f < best.f) best = res;
  }

  // Snap to the boundary when a component sits at zero within tolerance.
  for (const std::array<double, 2> cand : {std::array<double, 2>{0.0, best.x[1]}, std::array<double, 2>{best.x[0], 0.0},
                                           std::array<double, 2>{0.0, 0.0}}) {
    const double f = objective(cand);
    if (f <= best.f + 1e-9 * (1.0 + std::fabs(best.f))) {
      best.f = std::min(best.f, f);
      best.x = cand;
    }
  }

  std::array<double, 2> grad{};
  for (std::size_t k = 0; k < 2; ++k) {
    const double h = 1e-5 * std::max(1.0, best.x[k]);
    auto up = best.x, down = best.x;
    up[k] += h;
    down[k] -= h;
    grad[k] = (objective(up) - objective(down)) / (2.0 * h);
  }
  fit.gradient_norm = std::hypot(grad[0], grad[1]);
  fit.converged = best.converged && fit.gradient_norm <= options.gradient_tol;

  const auto sol = reml.solve(best.x[0], best.x[1]);
  fit.reml_deviance = sol.deviance;
  fit.var_resid = sol.pwrss / reml.residual_df();
  const double var_a = best.x[0] * best.x[0] * fit.var_resid;
  const double var_b = best.x[1] * best.x[1] * fit.var_resid;
  fit.var_patient = patients_first ? var_a : var_b;
  fit.var_model = patients_first ? var_b : var_a;
  fit.beta = sol.beta;
  fit.se = (fit.var_resid * sol.beta_cov_unscaled.diagonal()).array().sqrt();
  fit.pvals.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) fit.pvals(j) = stats::two_sided_p(fit.beta(j) / fit.se(j));

  const Icc ic = icc(fit.components());
  fit.icc_patient = ic.patient;
  fit.icc_model = ic.model;
  const R2 r2 = r2_nakagawa(fit.components(), x, fit.beta);
  fit.r2_marginal = r2.marginal;
  fit.r2_conditional = r2.conditional;
  return fit;
}

}  // namespace fairboard::lme
