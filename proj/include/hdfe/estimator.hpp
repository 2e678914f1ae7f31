#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hdfe/factor_index.hpp"
#include "hdfe/family.hpp"
#include "hdfe/projections.hpp"

namespace hdfe {

struct NewtonConfig {
  // Stop when |L_r - L_{r-1}| / (0.1 + |L_r|) < dev_tol.
  double dev_tol = 1e-8;
  int max_iter = 100;
  int max_halvings = 32;
  // When false, hitting max_iter returns a result flagged not converged
  // instead of throwing.
  bool require_convergence = true;
};

// Everything one Newton step needs at the current linear predictor.
struct IterationState {
  Eigen::VectorXd eta;
  Eigen::VectorXd mu;
  Eigen::VectorXd w;
  Eigen::VectorXd sqrt_w;
  Eigen::VectorXd nu;
  Eigen::VectorXd nu_tilde;
  Eigen::MatrixXd X_tilde;
  double loglik = 0.0;
};

IterationState make_state(const ModelData& data, const Family& family,
                          Eigen::VectorXd eta);

// Per-iteration view handed to a fit observer, before the step is applied.
struct IterationTrace {
  int iteration;
  const IterationState& state;
  const Eigen::VectorXd& nu_dd;
  const Eigen::MatrixXd& X_dd;
  const Eigen::VectorXd& delta_beta;
};
using FitObserver = std::function<void(const IterationTrace&)>;

struct FitResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  // Concentrated quantities evaluated at the final linear predictor.
  Eigen::MatrixXd X_dd;
  Eigen::VectorXd nu_dd;
  Eigen::VectorXd w;
  int iterations = 0;
  double final_deviance_change = 0.0;
  double loglik = 0.0;
  bool converged = false;
  std::vector<std::string> column_names;
};

// Starting values shared by every engine: category-1 level values alpha_1^0
// (zero for logit, group means of log(y + 0.1) for poisson). eta^0 is their
// stretch, which keeps eta^0 inside the model's column space.
Eigen::VectorXd initial_alpha1(const ModelData& data, const Family& family);
Eigen::VectorXd initial_eta(const ModelData& data, const Family& family);

// Solves (X_dd' X_dd) d = X_dd' nu_dd by Cholesky. Throws Collinearity with
// the offending column when X_dd' X_dd is numerically singular.
Eigen::VectorXd beta_update(const Eigen::MatrixXd& X_dd,
                            const Eigen::VectorXd& nu_dd,
                            std::span<const std::string> column_names = {});

// eta_r = (nu_tilde - nu_dd + X_dd delta_beta) / sqrt_w + eta_{r-1}, the
// linear-predictor increment D d_alpha + X d_beta implied by the residual
// identity nu_tilde - X~ d_beta - D~ d_alpha = nu_dd - X_dd d_beta.
Eigen::VectorXd eta_update(const IterationState& state,
                           const Eigen::VectorXd& nu_dd,
                           const Eigen::MatrixXd& X_dd,
                           const Eigen::VectorXd& delta_beta);

// Newton-Raphson with pseudo-demeaning.
FitResult fit(const ModelData& data, const Family& family,
              const ApConfig& ap = {}, const NewtonConfig& newton = {},
              const FitObserver& observer = {});

// Relative log-likelihood change used as the Newton stopping rule.
double deviance_change(double previous, double current);

}  // namespace hdfe
