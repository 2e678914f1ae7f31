#include <doctest.h>

#include <random>

#include "hdfe/dummy_oracle.hpp"
#include "hdfe/error.hpp"
#include "hdfe/fe_recovery.hpp"
#include "hdfe/simulation.hpp"
#include "oracles.hpp"

using hdfe::FactorIndex;
using hdfe::FeSolver;

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("target vector") {
  std::mt19937_64 rng(21);
  const auto eta = oracle::random_normal(rng, 12);
  Eigen::MatrixXd X(12, 2);
  X.col(0) = oracle::random_normal(rng, 12);
  X.col(1) = oracle::random_normal(rng, 12);
  CHECK(hdfe::target_vector(eta, X, Eigen::Vector2d::Zero()) == eta);
  CHECK(hdfe::target_vector(eta, Eigen::MatrixXd(12, 0), Eigen::VectorXd(0)) ==
        eta);
  const Eigen::Vector2d beta(0.7, -1.1);
  const auto b = hdfe::target_vector(eta, X, beta);
  for (int i = 0; i < 12; ++i) {
    CHECK(b[i] == eta[i] - (X(i, 0) * beta[0] + X(i, 1) * beta[1]));
  }
}

TEST_CASE("single category recovers group means") {
  const std::vector<FactorIndex> f = {
      FactorIndex::from_codes(std::vector<std::int64_t>{0, 1, 0, 2, 1, 0})};
  Eigen::VectorXd b(6);
  b << 1, 4, 2, 7, 6, 3;
  const auto fe = hdfe::solve_normal_equations(b, f);
  CHECK(fe.alpha[0][0] == doctest::Approx(2.0));
  CHECK(fe.alpha[0][1] == doctest::Approx(5.0));
  CHECK(fe.alpha[0][2] == doctest::Approx(7.0));
  CHECK(fe.sweeps <= 2);

  // Row actions only settle on the group means when b is consistent.
  Eigen::VectorXd consistent(6);
  consistent << 2, 5, 2, 7, 5, 2;
  const auto kz = hdfe::solve_kaczmarz(consistent, f);
  CHECK(kz.alpha[0][0] == doctest::Approx(2.0));
  CHECK(kz.alpha[0][1] == doctest::Approx(5.0));
  CHECK(kz.alpha[0][2] == doctest::Approx(7.0));
}

TEST_CASE("kaczmarz first row update") {
  const std::vector<FactorIndex> f = {
      FactorIndex::from_codes(std::vector<std::int64_t>{0}),
      FactorIndex::from_codes(std::vector<std::int64_t>{0})};
  hdfe::FeSolverConfig cfg;
  const auto fe = hdfe::solve_kaczmarz(Eigen::VectorXd::Constant(1, 4.0), f, cfg);
  CHECK(fe.alpha[0][0] == 2.0);
  CHECK(fe.alpha[1][0] == 2.0);
}

TEST_CASE("constant target on a balanced two-way design") {
  std::vector<std::int64_t> a, c;
  for (int i = 0; i < 5; ++i) {
    for (int t = 0; t < 4; ++t) {
      a.push_back(i);
      c.push_back(t);
    }
  }
  const std::vector<FactorIndex> f = {FactorIndex::from_codes(a),
                                      FactorIndex::from_codes(c)};
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(20, 3.5);
  for (auto solver : {FeSolver::NormalEquations, FeSolver::Kaczmarz}) {
    const auto fe = hdfe::recover_fixed_effects(b, f, solver);
    CHECK(max_abs(hdfe::fitted_contribution(fe, f) - b) <= 1e-7);
  }
}

TEST_CASE("three categories against dense least squares") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 5; ++rep) {
    const auto f = oracle::random_factors(rng, 60, {5, 4, 3});
    const auto b = oracle::random_normal(rng, 60);
    const auto expected = oracle::project_onto_dummies(f, b);
    hdfe::FeSolverConfig cfg;
    cfg.tolerance = 1e-10;
    const auto ne = hdfe::solve_normal_equations(b, f, cfg);
    const auto fit_ne = hdfe::fitted_contribution(ne, f);
    CHECK(max_abs(fit_ne - expected) <= 1e-6);
    CHECK(ne.residual_norm == doctest::Approx((b - fit_ne).norm()).epsilon(1e-10));

    // Both solvers on a target inside the dummy space.
    const auto kz = hdfe::solve_kaczmarz(expected, f, cfg);
    const auto ne2 = hdfe::solve_normal_equations(expected, f, cfg);
    const auto fit_kz = hdfe::fitted_contribution(kz, f);
    CHECK(max_abs(fit_kz - hdfe::fitted_contribution(ne2, f)) <= 1e-5);
    CHECK(max_abs(fit_kz - expected) <= 1e-6);
  }
}

TEST_CASE("sweep cap") {
  std::mt19937_64 rng(23);
  const auto f = oracle::random_factors(rng, 60, {5, 4});
  hdfe::FeSolverConfig cfg;
  cfg.tolerance = 1e-14;
  cfg.max_sweeps = 1;
  CHECK_THROWS_AS(hdfe::solve_kaczmarz(oracle::random_normal(rng, 60), f, cfg),
                  hdfe::NonConvergence);
}

TEST_CASE("normalization") {
  std::mt19937_64 rng(24);
  const auto f = oracle::random_factors(rng, 40, {4, 5, 3});
  const auto fe = hdfe::solve_normal_equations(oracle::random_normal(rng, 40), f);
  const auto norm = hdfe::normalize_fe(fe);
  CHECK(norm.alpha[1][0] == 0.0);
  CHECK(norm.alpha[2][0] == 0.0);
  CHECK(max_abs(hdfe::fitted_contribution(norm, f) -
                hdfe::fitted_contribution(fe, f)) <= 1e-14);
  const auto twice = hdfe::normalize_fe(norm);
  for (std::size_t k = 0; k < 3; ++k) CHECK(twice.alpha[k] == norm.alpha[k]);
}

TEST_CASE("recovered effects after a fit") {
  hdfe::DgpConfig cfg;
  cfg.N = 15;
  cfg.T = 8;
  cfg.seed = 25;
  const auto data = hdfe::drop_noncontributing(
                        hdfe::simulate_two_way_logit(cfg), hdfe::Family::logit())
                        .first;
  hdfe::ApConfig ap;
  ap.tolerance = 1e-10;
  hdfe::NewtonConfig newton;
  newton.dev_tol = 1e-12;
  const auto fit = hdfe::fit(data, hdfe::Family::logit(), ap, newton);
  const auto dummy = hdfe::fit_dummy(data, hdfe::Family::logit(), newton);
  const auto b = hdfe::target_vector(fit, data);
  const double scale = 1.0 + max_abs(fit.eta);
  for (auto solver : {FeSolver::NormalEquations, FeSolver::Kaczmarz}) {
    hdfe::FeSolverConfig fcfg;
    const auto fe = hdfe::normalize_fe(
        hdfe::recover_fixed_effects(b, data.factors, solver, fcfg));
    const Eigen::VectorXd eta =
        hdfe::fitted_contribution(fe, data.factors) + data.X * fit.beta;
    CHECK(max_abs(eta - fit.eta) <= 100 * fcfg.tolerance * scale);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(max_abs(fe.alpha[k] - dummy.alpha[k]) <= 1e-5);
    }
  }
}
