#include "hdfe/dummy_oracle.hpp"

#include <cmath>
#include <limits>

#include "hdfe/error.hpp"

namespace hdfe {

std::size_t dummy_column_count(const ModelData& data) {
  std::size_t l = 0;
  for (std::size_t k = 0; k < data.factors.size(); ++k) {
    l += data.factors[k].level_count() - (k == 0 ? 0 : 1);
  }
  return l + data.p();
}

bool dummy_fits_guard(const ModelData& data) {
  return static_cast<double>(data.n()) *
             static_cast<double>(dummy_column_count(data)) <=
         kDummySizeGuard;
}

FullDesign build_design(const ModelData& data) {
  data.validate();
  if (!dummy_fits_guard(data)) {
    throw SizeGuard("dummy design with " + std::to_string(data.n()) +
                    " rows and " + std::to_string(dummy_column_count(data)) +
                    " columns exceeds the dense size guard");
  }
  FullDesign design;
  for (std::size_t k = 0; k < data.factors.size(); ++k) {
    const auto& f = data.factors[k];
    for (FactorIndex::Level l = (k == 0 ? 0 : 1); l < f.level_count(); ++l) {
      design.column_map.push_back(
          {FullDesign::Column::Source::Level, k, l, 0});
    }
  }
  design.dummy_columns = design.column_map.size();
  for (std::size_t j = 0; j < data.p(); ++j) {
    design.column_map.push_back(
        {FullDesign::Column::Source::Regressor, 0, 0, j});
  }

  const auto n = static_cast<Eigen::Index>(data.n());
  design.Z = Eigen::MatrixXd::Zero(n, design.column_map.size());
  // Column offset of each category's first kept level.
  std::vector<Eigen::Index> offset(data.factors.size(), 0);
  Eigen::Index acc = 0;
  for (std::size_t k = 0; k < data.factors.size(); ++k) {
    offset[k] = acc - (k == 0 ? 0 : 1);
    acc += data.factors[k].level_count() - (k == 0 ? 0 : 1);
  }
  for (std::size_t k = 0; k < data.factors.size(); ++k) {
    const auto levels = data.factors[k].levels();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (k > 0 && levels[i] == 0) continue;
      design.Z(i, offset[k] + levels[i]) = 1.0;
    }
  }
  design.Z.rightCols(data.X.cols()) = data.X;

  Eigen::MatrixXd gram = design.Z.transpose() * design.Z;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success && llt.rcond() >= 1e-13) return design;

  // Drop dummy columns spanned by earlier ones (e.g. three-way designs where
  // pair dummies add up to exporter and importer totals). Greedy in column
  // order so the reference coding is kept wherever it already suffices.
  const auto l = static_cast<Eigen::Index>(design.dummy_columns);
  std::vector<Eigen::Index> kept;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(l, l);
  for (Eigen::Index c = 0; c < l; ++c) {
    const auto m = static_cast<Eigen::Index>(kept.size());
    Eigen::VectorXd b(m);
    for (Eigen::Index a = 0; a < m; ++a) b[a] = gram(kept[a], c);
    const Eigen::VectorXd r =
        L.topLeftCorner(m, m).triangularView<Eigen::Lower>().solve(b);
    const double d = gram(c, c) - r.squaredNorm();
    if (d <= 1e-9 * gram(c, c)) continue;
    L.block(m, 0, 1, m) = r.transpose();
    L(m, m) = std::sqrt(d);
    kept.push_back(c);
  }
  std::vector<FullDesign::Column> map;
  std::vector<Eigen::Index> cols;
  for (const auto c : kept) cols.push_back(c);
  for (Eigen::Index j = l; j < design.Z.cols(); ++j) cols.push_back(j);
  for (const auto c : cols) map.push_back(design.column_map[c]);
  design.Z = design.Z(Eigen::all, cols).eval();
  design.column_map = std::move(map);
  design.redundant_dummies = design.dummy_columns - kept.size();
  design.dummy_columns = kept.size();

  gram = design.Z.transpose() * design.Z;
  llt.compute(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw Singular("dummy design is rank deficient (regressors collinear "
                   "with the fixed effects)");
  }
  return design;
}

FullSystemSolution full_system_step(const FullDesign& design,
                                    const Eigen::VectorXd& sqrt_w,
                                    const Eigen::VectorXd& nu_tilde,
                                    std::size_t p) {
  const Eigen::MatrixXd Zt = sqrt_w.asDiagonal() * design.Z;
  const Eigen::VectorXd coef = Zt.colPivHouseholderQr().solve(nu_tilde);
  FullSystemSolution out;
  out.residual = nu_tilde - Zt * coef;
  out.delta_beta = coef.tail(static_cast<Eigen::Index>(p));
  return out;
}

DummyFit fit_dummy(const ModelData& data, const Family& family,
                   const NewtonConfig& newton) {
  family.check_response(data.y);
  const FullDesign design = build_design(data);
  const auto& Z = design.Z;
  const auto cols = Z.cols();
  const auto p = static_cast<Eigen::Index>(data.p());

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(cols);
  gamma.head(data.factors.front().level_count()) =
      initial_alpha1(data, family);
  Eigen::VectorXd eta = Z * gamma;
  double loglik = family.log_likelihood(data.y, eta);
  bool converged = false;
  double change = 0.0;

  for (int iter = 0;; ++iter) {
    const auto wq = family.working_quantities(data.y, eta);
    const Eigen::MatrixXd Zw = wq.w.cwiseSqrt().asDiagonal() * Z;
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(cols, cols);
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(Zw.transpose());
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(hessian);
    if (llt.info() != Eigen::Success) {
      throw Singular("dummy Hessian is not positive definite at iteration " +
                     std::to_string(iter + 1));
    }
    if (converged || iter == newton.max_iter) {
      if (!converged && newton.require_convergence) {
        throw NonConvergence("dummy Newton iterations did not converge");
      }
      DummyFit out;
      out.vcov = llt.solve(Eigen::MatrixXd::Identity(cols, cols));
      out.beta_vcov = out.vcov.bottomRightCorner(p, p);
      out.gamma = gamma;
      out.beta = gamma.tail(p);
      for (std::size_t k = 0; k < data.factors.size(); ++k) {
        out.alpha.push_back(
            Eigen::VectorXd::Zero(data.factors[k].level_count()));
      }
      for (std::size_t c = 0; c < design.dummy_columns; ++c) {
        const auto& col = design.column_map[c];
        out.alpha[col.factor][col.level] = gamma[c];
      }
      out.eta = eta;
      out.loglik = loglik;
      out.iterations = iter;
      return out;
    }
    // Canonical link: Z'W nu = Z'(y - mu).
    const Eigen::VectorXd step =
        llt.solve(Z.transpose() * (data.y - wq.mu));

    double scale = 1.0;
    bool accepted = false;
    double candidate_ll = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd candidate;
    for (int h = 0; h <= newton.max_halvings; ++h) {
      candidate = eta + scale * (Z * step);
      if (candidate.allFinite()) {
        candidate_ll = family.log_likelihood(data.y, candidate);
        if (std::isfinite(candidate_ll) &&
            candidate_ll >= loglik - 1e-12 * (1.0 + std::abs(loglik))) {
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) {
      throw NonConvergence("dummy step-halving failed at iteration " +
                           std::to_string(iter + 1));
    }
    gamma += scale * step;
    eta = std::move(candidate);
    change = deviance_change(loglik, candidate_ll);
    loglik = candidate_ll;
    converged = change < newton.dev_tol;
  }
}

}  // namespace hdfe
