#include "hdfe/inference.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "hdfe/error.hpp"

namespace hdfe {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  const auto p = m.rows();
  if (p == 0) return Eigen::MatrixXd(0, 0);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    throw Singular(std::string(what) + " is singular");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  return (0.5 * (inv + inv.transpose())).eval();
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& bread,
                         const Eigen::MatrixXd& meat) {
  Eigen::MatrixXd v = bread * meat * bread;
  return (0.5 * (v + v.transpose())).eval();
}

}  // namespace

std::string vcov_label(VcovKind kind) {
  switch (kind) {
    case VcovKind::Hessian: return "hessian";
    case VcovKind::Opg: return "opg";
    case VcovKind::Robust: return "robust";
    case VcovKind::Cluster: return "cluster";
  }
  return "unknown";
}

Eigen::MatrixXd score_matrix(const Eigen::MatrixXd& X_dd,
                             const Eigen::VectorXd& nu_dd) {
  if (X_dd.rows() != nu_dd.size()) {
    throw InvalidInput("score_matrix: row count mismatch");
  }
  return nu_dd.asDiagonal() * X_dd;
}

Vcov vcov_hessian(const Eigen::MatrixXd& X_dd) {
  return {spd_inverse(X_dd.transpose() * X_dd, "concentrated Hessian"),
          VcovKind::Hessian, {}};
}

Vcov vcov_opg(const Eigen::MatrixXd& G) {
  return {spd_inverse(G.transpose() * G, "outer product of gradients"),
          VcovKind::Opg, {}};
}

Vcov vcov_robust(const Eigen::MatrixXd& X_dd, const Eigen::MatrixXd& G) {
  if (X_dd.rows() != G.rows() || X_dd.cols() != G.cols()) {
    throw InvalidInput("vcov_robust: shape mismatch");
  }
  const auto bread =
      spd_inverse(X_dd.transpose() * X_dd, "concentrated Hessian");
  return {sandwich(bread, G.transpose() * G), VcovKind::Robust, {}};
}

Vcov vcov_cluster(const Eigen::MatrixXd& X_dd, const Eigen::MatrixXd& G,
                  const FactorIndex& cluster) {
  if (X_dd.rows() != G.rows() || X_dd.cols() != G.cols() ||
      static_cast<Eigen::Index>(cluster.size()) != G.rows()) {
    throw InvalidInput("vcov_cluster: shape mismatch");
  }
  const auto bread =
      spd_inverse(X_dd.transpose() * X_dd, "concentrated Hessian");
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(cluster.level_count()), G.cols());
  const auto levels = cluster.levels();
  for (Eigen::Index i = 0; i < G.rows(); ++i) sums.row(levels[i]) += G.row(i);
  Vcov out{sandwich(bread, sums.transpose() * sums), VcovKind::Cluster, {}};
  if (cluster.level_count() < static_cast<std::size_t>(G.cols())) {
    out.warning = "only " + std::to_string(cluster.level_count()) +
                  " clusters for " + std::to_string(G.cols()) +
                  " parameters; the clustered meat matrix is singular";
  }
  return out;
}

Eigen::VectorXd standard_errors(const Vcov& v) {
  return v.matrix.diagonal().cwiseMax(0.0).cwiseSqrt();
}

double chi_square_upper_tail(double statistic, double df) {
  if (!(df > 0.0)) throw InvalidInput("chi-square df must be positive");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

WaldResult wald_test(const Eigen::VectorXd& beta, const Vcov& V,
                     const Eigen::MatrixXd& R, const Eigen::VectorXd& r) {
  const auto q = R.rows();
  if (q == 0) throw InvalidInput("wald_test needs at least one restriction");
  if (R.cols() != beta.size() || r.size() != q ||
      V.matrix.rows() != beta.size() || V.matrix.cols() != beta.size()) {
    throw InvalidInput("wald_test: dimension mismatch");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
  if (lu.rank() < q) {
    throw InvalidInput("restriction matrix has rank " +
                       std::to_string(lu.rank()) + " < " + std::to_string(q));
  }
  const Eigen::VectorXd diff = R * beta - r;
  const Eigen::MatrixXd middle = R * V.matrix * R.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(middle);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.rcond() < 1e-14) {
    throw Singular("R V R' is singular");
  }
  WaldResult out;
  out.statistic = diff.dot(ldlt.solve(diff));
  out.df = static_cast<int>(q);
  out.p_value = chi_square_upper_tail(out.statistic, out.df);
  return out;
}

}  // namespace hdfe
