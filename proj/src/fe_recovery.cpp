#include "hdfe/fe_recovery.hpp"

#include <cmath>

#include "hdfe/error.hpp"

namespace hdfe {

namespace {

void check_inputs(const Eigen::VectorXd& b,
                  std::span<const FactorIndex> factors,
                  const FeSolverConfig& cfg) {
  if (factors.empty()) throw InvalidInput("at least one factor is required");
  for (const auto& f : factors) {
    if (static_cast<Eigen::Index>(f.size()) != b.size()) {
      throw InvalidInput("factor '" + f.name() +
                         "' does not match the target length");
    }
  }
  if (!(cfg.tolerance > 0.0) || cfg.max_sweeps < 1) {
    throw InvalidInput("invalid fixed-effect solver configuration");
  }
}

std::vector<Eigen::VectorXd> zero_alpha(std::span<const FactorIndex> factors) {
  std::vector<Eigen::VectorXd> alpha;
  alpha.reserve(factors.size());
  for (const auto& f : factors) {
    alpha.push_back(Eigen::VectorXd::Zero(f.level_count()));
  }
  return alpha;
}

double squared_distance(const std::vector<Eigen::VectorXd>& a,
                        const std::vector<Eigen::VectorXd>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]).squaredNorm();
  return d;
}

void finish(FixedEffects& fe, const Eigen::VectorXd& b,
            std::span<const FactorIndex> factors) {
  fe.residual_norm = (b - fitted_contribution(fe, factors)).norm();
}

}  // namespace

FeSolver parse_fe_solver(const std::string& name) {
  if (name == "gs" || name == "normal-equations") {
    return FeSolver::NormalEquations;
  }
  if (name == "kaczmarz") return FeSolver::Kaczmarz;
  throw InvalidInput("unknown fixed-effect solver '" + name +
                     "' (expected gs or kaczmarz)");
}

std::string fe_solver_name(FeSolver solver) {
  return solver == FeSolver::NormalEquations ? "gs" : "kaczmarz";
}

Eigen::VectorXd target_vector(const Eigen::VectorXd& eta,
                              const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& beta) {
  if (X.rows() != eta.size() || X.cols() != beta.size()) {
    throw InvalidInput("target_vector: dimension mismatch");
  }
  if (beta.size() == 0) return eta;
  return eta - X * beta;
}

Eigen::VectorXd target_vector(const FitResult& fit, const ModelData& data) {
  return target_vector(fit.eta, data.X, fit.beta);
}

Eigen::VectorXd fitted_contribution(const FixedEffects& fe,
                                    std::span<const FactorIndex> factors) {
  if (factors.empty() || fe.alpha.size() != factors.size()) {
    throw InvalidInput("fixed effects do not match the factor list");
  }
  const auto n = static_cast<Eigen::Index>(factors.front().size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto levels = factors[k].levels();
    for (Eigen::Index i = 0; i < n; ++i) out[i] += fe.alpha[k][levels[i]];
  }
  return out;
}

FixedEffects solve_normal_equations(const Eigen::VectorXd& b,
                                    std::span<const FactorIndex> factors,
                                    const FeSolverConfig& cfg) {
  check_inputs(b, factors, cfg);
  const auto n = b.size();
  const std::size_t K = factors.size();
  FixedEffects fe;
  fe.solver = FeSolver::NormalEquations;
  fe.alpha = zero_alpha(factors);

  std::vector<Eigen::VectorXd> counts;
  for (const auto& f : factors) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(f.level_count());
    for (auto l : f.levels()) c[l] += 1.0;
    counts.push_back(c.cwiseInverse());
  }

  // Running D alpha; the contribution of category k is swapped in and out.
  Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
  const double tol2 = cfg.tolerance * cfg.tolerance;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const auto previous = fe.alpha;
    for (std::size_t k = 0; k < K; ++k) {
      const auto levels = factors[k].levels();
      auto& a = fe.alpha[k];
      Eigen::VectorXd sums = Eigen::VectorXd::Zero(a.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        sums[levels[i]] += b[i] - (fitted[i] - a[levels[i]]);
      }
      const Eigen::VectorXd updated = sums.cwiseProduct(counts[k]);
      for (Eigen::Index i = 0; i < n; ++i) {
        fitted[i] += updated[levels[i]] - a[levels[i]];
      }
      a = updated;
    }
    if (squared_distance(fe.alpha, previous) < tol2) {
      fe.sweeps = sweep;
      finish(fe, b, factors);
      return fe;
    }
  }
  throw NonConvergence("normal-equation fixed-effect solver did not converge "
                       "within " + std::to_string(cfg.max_sweeps) + " sweeps");
}

FixedEffects solve_kaczmarz(const Eigen::VectorXd& b,
                            std::span<const FactorIndex> factors,
                            const FeSolverConfig& cfg) {
  check_inputs(b, factors, cfg);
  const auto n = b.size();
  const std::size_t K = factors.size();
  const double inv_k = 1.0 / static_cast<double>(K);
  FixedEffects fe;
  fe.solver = FeSolver::Kaczmarz;
  fe.alpha = zero_alpha(factors);
  const double tol2 = cfg.tolerance * cfg.tolerance;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const auto previous = fe.alpha;
    for (Eigen::Index i = 0; i < n; ++i) {
      double inner = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        inner += fe.alpha[k][factors[k].level_of(i)];
      }
      const double step = (b[i] - inner) * inv_k;
      for (std::size_t k = 0; k < K; ++k) {
        fe.alpha[k][factors[k].level_of(i)] += step;
      }
    }
    if (squared_distance(fe.alpha, previous) < tol2) {
      fe.sweeps = sweep;
      finish(fe, b, factors);
      return fe;
    }
  }
  throw NonConvergence("Kaczmarz fixed-effect solver did not converge within " +
                       std::to_string(cfg.max_sweeps) + " sweeps");
}

FixedEffects recover_fixed_effects(const Eigen::VectorXd& b,
                                   std::span<const FactorIndex> factors,
                                   FeSolver solver,
                                   const FeSolverConfig& cfg) {
  return solver == FeSolver::NormalEquations
             ? solve_normal_equations(b, factors, cfg)
             : solve_kaczmarz(b, factors, cfg);
}

FixedEffects normalize_fe(FixedEffects fe) {
  if (fe.alpha.empty()) return fe;
  double shift = 0.0;
  for (std::size_t k = 1; k < fe.alpha.size(); ++k) {
    auto& a = fe.alpha[k];
    if (a.size() == 0) continue;
    const double ref = a[0];
    a.array() -= ref;
    shift += ref;
  }
  fe.alpha[0].array() += shift;
  return fe;
}

}  // namespace hdfe
