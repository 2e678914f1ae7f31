#pragma once

#include <Eigen/Dense>
#include <string>

#include "hdfe/factor_index.hpp"

namespace hdfe {

enum class VcovKind { Hessian, Opg, Robust, Cluster };

std::string vcov_label(VcovKind kind);

struct Vcov {
  Eigen::MatrixXd matrix;
  VcovKind label = VcovKind::Hessian;
  // Non-empty when the estimate is usable but suspect (e.g. fewer clusters
  // than parameters).
  std::string warning;
};

// Rows g_i = X_dd_i * nu_dd_i: per-observation contributions to the
// concentrated gradient.
Eigen::MatrixXd score_matrix(const Eigen::MatrixXd& X_dd,
                             const Eigen::VectorXd& nu_dd);

// (X_dd' X_dd)^{-1}
Vcov vcov_hessian(const Eigen::MatrixXd& X_dd);
// (G'G)^{-1}
Vcov vcov_opg(const Eigen::MatrixXd& G);
// H^{-1} G'G H^{-1}
Vcov vcov_robust(const Eigen::MatrixXd& X_dd, const Eigen::MatrixXd& G);
// H^{-1} (sum_c s_c s_c') H^{-1}, s_c the within-cluster column sums of G.
// No small-sample factor.
Vcov vcov_cluster(const Eigen::MatrixXd& X_dd, const Eigen::MatrixXd& G,
                  const FactorIndex& cluster);

Eigen::VectorXd standard_errors(const Vcov& v);

struct WaldResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// W = (R b - r)' (R V R')^{-1} (R b - r), chi-square with q = rows(R) df.
WaldResult wald_test(const Eigen::VectorXd& beta, const Vcov& V,
                     const Eigen::MatrixXd& R, const Eigen::VectorXd& r);

// Upper tail probability of a chi-square variate.
double chi_square_upper_tail(double statistic, double df);

}  // namespace hdfe
