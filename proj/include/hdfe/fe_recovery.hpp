#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "hdfe/estimator.hpp"
#include "hdfe/factor_index.hpp"

namespace hdfe {

enum class FeSolver { NormalEquations, Kaczmarz };

FeSolver parse_fe_solver(const std::string& name);
std::string fe_solver_name(FeSolver solver);

struct FixedEffects {
  std::vector<Eigen::VectorXd> alpha;  // per category, per level
  FeSolver solver = FeSolver::NormalEquations;
  int sweeps = 0;
  double residual_norm = 0.0;  // ||b - D alpha||_2
};

struct FeSolverConfig {
  double tolerance = 1e-8;
  int max_sweeps = 100000;
};

// b = eta - X beta.
Eigen::VectorXd target_vector(const FitResult& fit, const ModelData& data);
Eigen::VectorXd target_vector(const Eigen::VectorXd& eta,
                              const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& beta);

// D alpha, i.e. the fixed effects stretched back to observations.
Eigen::VectorXd fitted_contribution(const FixedEffects& fe,
                                    std::span<const FactorIndex> factors);

// Cycles over categories, replacing alpha_k by the group means of
// b - sum_{m != k} D_m alpha_m, until ||rho_j - rho_{j-1}||_2 < tolerance.
FixedEffects solve_normal_equations(const Eigen::VectorXd& b,
                                    std::span<const FactorIndex> factors,
                                    const FeSolverConfig& cfg = {});

// Row-action sweeps rho += (b_i - <d_i, rho>) / K * d_i in data order.
FixedEffects solve_kaczmarz(const Eigen::VectorXd& b,
                            std::span<const FactorIndex> factors,
                            const FeSolverConfig& cfg = {});

FixedEffects recover_fixed_effects(const Eigen::VectorXd& b,
                                   std::span<const FactorIndex> factors,
                                   FeSolver solver,
                                   const FeSolverConfig& cfg = {});

// Reference normalization: categories 2..K have their first level moved to
// zero and the shift absorbed by category 1. D alpha is unchanged.
FixedEffects normalize_fe(FixedEffects fe);

}  // namespace hdfe
