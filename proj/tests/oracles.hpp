#pragma once

// Brute-force reference computations used only by the tests. They work on
// dense matrices in extended precision and never call into the code paths
// they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hdfe/factor_index.hpp"

namespace oracle {

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline MatL to_long(const Eigen::MatrixXd& m) { return m.cast<long double>(); }
inline VecL to_long(const Eigen::VectorXd& v) { return v.cast<long double>(); }

// All dummy columns of all factors (rank deficient in general).
inline MatL dummy_matrix(const std::vector<hdfe::FactorIndex>& factors) {
  const auto n = static_cast<Eigen::Index>(factors.front().size());
  Eigen::Index cols = 0;
  for (const auto& f : factors) cols += f.level_count();
  MatL D = MatL::Zero(n, cols);
  Eigen::Index off = 0;
  for (const auto& f : factors) {
    for (Eigen::Index i = 0; i < n; ++i) D(i, off + f.level_of(i)) = 1;
    off += f.level_count();
  }
  return D;
}

// v - A (A'A)^- A' v via a complete orthogonal decomposition.
inline VecL annihilate(const MatL& A, const VecL& v) {
  Eigen::CompleteOrthogonalDecomposition<MatL> cod(A);
  return v - A * cod.solve(v);
}

// (I - D~ (D~'D~)^- D~') v with D~ = diag(sqrt w) D.
inline Eigen::VectorXd weighted_annihilator(
    const std::vector<hdfe::FactorIndex>& factors, const Eigen::VectorXd& w,
    const Eigen::VectorXd& v) {
  const VecL sw = to_long(w).array().sqrt().matrix();
  const MatL Dt = sw.asDiagonal() * dummy_matrix(factors);
  return annihilate(Dt, to_long(v)).cast<double>();
}

// Projection of b onto the column space of D (unweighted).
inline Eigen::VectorXd project_onto_dummies(
    const std::vector<hdfe::FactorIndex>& factors, const Eigen::VectorXd& b) {
  const VecL bl = to_long(b);
  return (bl - annihilate(dummy_matrix(factors), bl)).cast<double>();
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> naive_group_sums(
    const hdfe::FactorIndex& f, const Eigen::VectorXd& v,
    const Eigen::VectorXd& w) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(f.level_count());
  Eigen::VectorXd ws = Eigen::VectorXd::Zero(f.level_count());
  for (std::size_t l = 0; l < f.level_count(); ++l) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.level_of(i) == l) {
        s[l] += w[i] * v[i];
        ws[l] += w[i];
      }
    }
  }
  return {s, ws};
}

// (X'X)^{-1} X'y in extended precision.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y) {
  const MatL Xl = to_long(X);
  const MatL xtx = Xl.transpose() * Xl;
  const VecL xty = Xl.transpose() * to_long(y);
  return xtx.fullPivLu().solve(xty).cast<double>();
}

inline Eigen::MatrixXd inverse(const Eigen::MatrixXd& m) {
  return to_long(m).fullPivLu().inverse().cast<double>();
}

inline std::vector<hdfe::FactorIndex> random_factors(
    std::mt19937_64& rng, std::size_t n, const std::vector<int>& levels) {
  std::vector<hdfe::FactorIndex> out;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    std::vector<std::int64_t> codes(n);
    // Cover every level once, then fill at random.
    for (std::size_t i = 0; i < n; ++i) {
      codes[i] = i < static_cast<std::size_t>(levels[k])
                     ? static_cast<std::int64_t>(i)
                     : static_cast<std::int64_t>(rng() % levels[k]);
    }
    std::shuffle(codes.begin(), codes.end(), rng);
    out.push_back(hdfe::FactorIndex::from_codes(codes, "f" + std::to_string(k)));
  }
  return out;
}

inline Eigen::VectorXd random_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

inline Eigen::VectorXd random_weights(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.05, 2.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace oracle
