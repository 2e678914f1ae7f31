#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hdfe/estimator.hpp"
#include "hdfe/factor_index.hpp"
#include "hdfe/family.hpp"

namespace hdfe {

// Explicit dummy-variable design [D X]. Category 0 keeps all its levels;
// categories 1..K-1 drop their first level (reference coding). Any further
// dummy column spanned by earlier ones is dropped too; its level gets 0.
struct FullDesign {
  struct Column {
    enum class Source { Level, Regressor } source;
    std::size_t factor = 0;  // Level columns
    FactorIndex::Level level = 0;
    std::size_t regressor = 0;  // Regressor columns
  };

  Eigen::MatrixXd Z;
  std::vector<Column> column_map;
  std::size_t dummy_columns = 0;
  std::size_t redundant_dummies = 0;
};

// Largest dense design the oracle agrees to build: n * (p + l) entries.
inline constexpr double kDummySizeGuard = 5e7;

std::size_t dummy_column_count(const ModelData& data);
bool dummy_fits_guard(const ModelData& data);

FullDesign build_design(const ModelData& data);

struct DummyFit {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  // Per category, per level; reference levels carry 0.
  std::vector<Eigen::VectorXd> alpha;
  // Inverse of Z'WZ at the optimum, and its regressor block.
  Eigen::MatrixXd vcov;
  Eigen::MatrixXd beta_vcov;
  Eigen::VectorXd eta;
  double loglik = 0.0;
  int iterations = 0;
};

// Plain Newton-Raphson on the full design with the same stopping rule,
// starting values and step-halving as fit().
DummyFit fit_dummy(const ModelData& data, const Family& family,
                   const NewtonConfig& newton = {});

// Weighted regression of nu_tilde on [D~ X~] solved densely. Returns the
// residual vector and the regressor block of the coefficients.
struct FullSystemSolution {
  Eigen::VectorXd residual;
  Eigen::VectorXd delta_beta;
};
FullSystemSolution full_system_step(const FullDesign& design,
                                    const Eigen::VectorXd& sqrt_w,
                                    const Eigen::VectorXd& nu_tilde,
                                    std::size_t p);

}  // namespace hdfe
