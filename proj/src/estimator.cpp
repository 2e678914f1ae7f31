#include "hdfe/estimator.hpp"

#include <cmath>
#include <limits>

#include "hdfe/error.hpp"

namespace hdfe {

namespace {

// A regressor whose demeaned norm falls this far below its weighted norm
// lies (numerically) in the span of the fixed effects.
constexpr double kFeCollinearRatio = 1e-7;
constexpr double kGramRcondFloor = 1e-13;
constexpr double kLoglikSlack = 1e-12;

std::string column_label(std::span<const std::string> names,
                         Eigen::Index j) {
  return static_cast<std::size_t>(j) < names.size() ? names[j]
                                                    : std::to_string(j);
}

}  // namespace

double deviance_change(double previous, double current) {
  return std::abs(current - previous) / (0.1 + std::abs(current));
}

IterationState make_state(const ModelData& data, const Family& family,
                          Eigen::VectorXd eta) {
  IterationState s;
  auto wq = family.working_quantities(data.y, eta);
  s.eta = std::move(eta);
  s.mu = std::move(wq.mu);
  s.w = std::move(wq.w);
  s.nu = std::move(wq.nu);
  s.sqrt_w = s.w.array().sqrt().matrix();
  s.nu_tilde = s.sqrt_w.cwiseProduct(s.nu);
  s.X_tilde = s.sqrt_w.asDiagonal() * data.X;
  s.loglik = family.log_likelihood(data.y, s.eta);
  return s;
}

Eigen::VectorXd initial_alpha1(const ModelData& data, const Family& family) {
  const auto& f = data.factors.front();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(f.level_count());
  if (family.kind() == Family::Kind::Poisson) {
    const Eigen::VectorXd logy = (data.y.array() + 0.1).log().matrix();
    const auto sums =
        group_sums(f, logy, Eigen::VectorXd::Ones(data.y.size()));
    alpha = sums.weighted.cwiseQuotient(sums.weights);
  }
  return alpha;
}

Eigen::VectorXd initial_eta(const ModelData& data, const Family& family) {
  const auto alpha = initial_alpha1(data, family);
  const auto levels = data.factors.front().levels();
  Eigen::VectorXd eta(data.y.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = alpha[levels[i]];
  return eta;
}

Eigen::VectorXd beta_update(const Eigen::MatrixXd& X_dd,
                            const Eigen::VectorXd& nu_dd,
                            std::span<const std::string> column_names) {
  const auto p = X_dd.cols();
  if (nu_dd.size() != X_dd.rows()) {
    throw InvalidInput("beta_update: row count mismatch");
  }
  if (p == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXd gram = X_dd.transpose() * X_dd;
  // Condition check on the unit-diagonal rescaling so column scale does not
  // masquerade as collinearity.
  const Eigen::VectorXd scale = gram.diagonal().cwiseSqrt();
  bool singular = (scale.array() <= 0.0).any();
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!singular) {
    const Eigen::MatrixXd scaled = scale.cwiseInverse().asDiagonal() * gram *
                                   scale.cwiseInverse().asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> scaled_llt(scaled);
    singular = scaled_llt.info() != Eigen::Success ||
               scaled_llt.rcond() < kGramRcondFloor;
    if (!singular) llt.compute(gram);
    singular = singular || llt.info() != Eigen::Success;
  }
  if (singular) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X_dd);
    const auto rank = qr.rank();
    const auto col =
        qr.colsPermutation().indices()[std::min<Eigen::Index>(rank, p - 1)];
    throw Collinearity(col, "regressor '" + column_label(column_names, col) +
                                "' is collinear with the fixed effects or "
                                "other regressors");
  }
  return llt.solve(X_dd.transpose() * nu_dd);
}

Eigen::VectorXd eta_update(const IterationState& state,
                           const Eigen::VectorXd& nu_dd,
                           const Eigen::MatrixXd& X_dd,
                           const Eigen::VectorXd& delta_beta) {
  Eigen::VectorXd increment = state.nu_tilde - nu_dd;
  if (delta_beta.size() > 0) increment += X_dd * delta_beta;
  Eigen::VectorXd eta =
      state.eta + increment.cwiseQuotient(state.sqrt_w);
  if (!eta.allFinite()) {
    throw InvalidInput("linear predictor update produced non-finite values");
  }
  return eta;
}

FitResult fit(const ModelData& data, const Family& family, const ApConfig& ap,
              const NewtonConfig& newton, const FitObserver& observer) {
  data.validate();
  ap.validate();
  family.check_response(data.y);
  check_full_rank(data);
  const auto p = static_cast<Eigen::Index>(data.p());

  FitResult result;
  result.column_names = data.column_names;
  result.beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = initial_eta(data, family);
  bool converged = false;
  double change = 0.0;

  for (int iter = 0;; ++iter) {
    try {
      IterationState state = make_state(data, family, std::move(eta));
      WeightedFrame frame(data.factors, state.w);
      auto dd = ap_demean_frame(frame, ap, state.nu_tilde, state.X_tilde,
                                data.column_names);

      if (converged || iter == newton.max_iter) {
        if (!converged && newton.require_convergence) {
          throw NonConvergence("Newton iterations did not converge within " +
                               std::to_string(newton.max_iter) +
                               " iterations (last change " +
                               std::to_string(change) + ")");
        }
        result.eta = std::move(state.eta);
        result.X_dd = std::move(dd.X_dd);
        result.nu_dd = std::move(dd.nu_dd);
        result.w = std::move(state.w);
        result.loglik = state.loglik;
        result.iterations = iter;
        result.final_deviance_change = change;
        result.converged = converged;
        return result;
      }

      for (Eigen::Index j = 0; j < p; ++j) {
        const double before = state.X_tilde.col(j).norm();
        if (before > 0.0 && dd.X_dd.col(j).norm() < kFeCollinearRatio * before) {
          throw Collinearity(j, "regressor '" +
                                    column_label(data.column_names, j) +
                                    "' is perfectly collinear with the fixed "
                                    "effects");
        }
      }
      const Eigen::VectorXd delta_beta =
          beta_update(dd.X_dd, dd.nu_dd, data.column_names);
      if (observer) {
        observer(IterationTrace{iter + 1, state, dd.nu_dd, dd.X_dd,
                                delta_beta});
      }
      const Eigen::VectorXd full = eta_update(state, dd.nu_dd, dd.X_dd,
                                              delta_beta);
      const Eigen::VectorXd step = full - state.eta;

      double scale = 1.0;
      double loglik = -std::numeric_limits<double>::infinity();
      Eigen::VectorXd candidate;
      bool accepted = false;
      for (int h = 0; h <= newton.max_halvings; ++h) {
        candidate = state.eta + scale * step;
        if (candidate.allFinite()) {
          loglik = family.log_likelihood(data.y, candidate);
          if (std::isfinite(loglik) &&
              loglik >= state.loglik -
                            kLoglikSlack * (1.0 + std::abs(state.loglik))) {
            accepted = true;
            break;
          }
        }
        scale *= 0.5;
      }
      if (!accepted) {
        throw NonConvergence("step-halving failed to increase the "
                             "log-likelihood");
      }
      result.beta += scale * delta_beta;
      change = deviance_change(state.loglik, loglik);
      converged = change < newton.dev_tol;
      eta = std::move(candidate);
    } catch (Error& e) {
      if (!e.iteration) {
        e.iteration = iter + 1;
        e.add_context("iteration " + std::to_string(iter + 1));
      }
      throw;
    }
  }
}

}  // namespace hdfe
