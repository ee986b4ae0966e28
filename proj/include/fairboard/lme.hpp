#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace fairboard::lme {

struct VarianceComponents {
  double patient = 0.0;
  double model = 0.0;
  double residual = 0.0;
};

struct Icc {
  double patient;
  double model;
};

struct R2 {
  double marginal;
  double conditional;
};

// ICC_j = var_j / (var_patient + var_model + var_residual); 0 when all vanish.
Icc icc(const VarianceComponents& v);

// Nakagawa-Schielzeth: var_fixed is the population variance of x * beta.
R2 r2_nakagawa(const VarianceComponents& v, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta);

struct LmeOptions {
  // Simplex starts for both variance ratios (var_group / var_residual).
  std::vector<double> start_ratios{0.01, 0.1, 1.0, 10.0};
  int max_iterations = 500;
  double ftol = 1e-10;
  double xtol = 1e-9;
  double gradient_tol = 1e-2;
};

struct LmeFit {
  std::vector<std::string> terms;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd pvals;
  double var_patient = 0.0;
  double var_model = 0.0;
  double var_resid = 0.0;
  double icc_patient = 0.0;
  double icc_model = 0.0;
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_patients = 0;
  std::size_t n_models = 0;
  bool converged = false;
  // -2 * restricted log-likelihood at the optimum.
  double reml_deviance = 0.0;
  double gradient_norm = 0.0;
  // Best deviance after each simplex iteration; restarts[i] is where start i begins.
  std::vector<double> trace;
  std::vector<std::size_t> restarts;

  VarianceComponents components() const { return {var_patient, var_model, var_resid}; }
};

// REML criterion for y = x beta + Z_a u_a + Z_b u_b + e with two crossed
// random intercepts, parameterized by the relative standard deviations
// theta_j = sd_j / sd_residual. Uses the scaled mixed-model equations with the
// larger factor eliminated as a diagonal block, so cost per evaluation is
// O(levels_a * (levels_b + p)^2) and never touches an n x n matrix.
class CrossedReml {
 public:
  CrossedReml(std::span<const double> y, const Eigen::MatrixXd& x, std::span<const int> level_a, int n_levels_a,
              std::span<const int> level_b, int n_levels_b);

  struct Solution {
    Eigen::VectorXd beta;
    // (X' H^-1 X)^-1, H = V / var_residual.
    Eigen::MatrixXd beta_cov_unscaled;
    double pwrss;
    double deviance;
  };

  Solution solve(double theta_a, double theta_b) const;
  double deviance(double theta_a, double theta_b) const { return solve(theta_a, theta_b).deviance; }
  double residual_df() const { return static_cast<double>(n_ - p_); }

 private:
  Eigen::Index n_, p_;
  int la_, lb_;
  Eigen::VectorXd na_, nb_;
  Eigen::MatrixXd za_x_, za_zb_, zb_x_, xtx_;
  Eigen::VectorXd za_y_, zb_y_, xty_;
  double yty_;
};

// Fits y ~ x + (1 | patient) + (1 | model) by REML. Rows with non-finite y are
// dropped. Throws SingularDesign for a rank-deficient x and TooFewValues when
// a grouping factor has fewer than two levels. Non-convergence is reported
// through converged = false with the best iterate.
LmeFit fit_crossed_lme(std::span<const double> y, const Eigen::MatrixXd& x, const std::vector<std::string>& terms,
                       std::span<const std::string> patient_ids, std::span<const std::string> model_ids,
                       const LmeOptions& options = {});

}  // namespace fairboard::lme
