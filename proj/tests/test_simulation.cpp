#include <doctest.h>

#include <cmath>

#include "hdfe/simulation.hpp"

using hdfe::Design;
using hdfe::DgpConfig;

TEST_CASE("two-way logit dimensions") {
  DgpConfig cfg;
  cfg.N = 250;
  cfg.T = 50;
  const auto data = hdfe::simulate(cfg);
  CHECK(data.n() == 12500);
  CHECK(data.p() == 3);
  REQUIRE(data.factors.size() == 2);
  CHECK(data.factors[0].level_count() == 250);
  CHECK(data.factors[1].level_count() == 50);
  const double bound = 4.0 / std::sqrt(static_cast<double>(data.n()));
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(std::abs(data.X.col(j).mean()) <= bound);
  }
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    REQUIRE((data.y[i] == 0.0 || data.y[i] == 1.0));
  }
}

TEST_CASE("three-way poisson dimensions") {
  DgpConfig cfg;
  cfg.design = Design::ThreeWayPpml;
  cfg.N = 10;
  cfg.T = 5;
  const auto data = hdfe::simulate(cfg);
  CHECK(data.n() == 500);
  REQUIRE(data.factors.size() == 3);
  CHECK(data.factors[0].level_count() == 50);
  CHECK(data.factors[1].level_count() == 50);
  CHECK(data.factors[2].level_count() == 100);
  CHECK(data.y.minCoeff() > 0.0);
  double share = 0.0;
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    const double d = data.X(i, 1);
    REQUIRE((d == 0.0 || d == 1.0));
    share += d;
  }
  share /= static_cast<double>(data.n());
  CHECK(std::abs(share - 0.5) <= 4.0 * 0.5 / std::sqrt(500.0));
}

TEST_CASE("simulation is deterministic in the seed") {
  for (auto design : {Design::TwoWayLogit, Design::ThreeWayPpml}) {
    DgpConfig cfg;
    cfg.design = design;
    cfg.N = 8;
    cfg.T = 4;
    cfg.seed = 123;
    cfg.extra_regressors = 2;
    const auto a = hdfe::simulate(cfg);
    const auto b = hdfe::simulate(cfg);
    CHECK(a.y == b.y);
    CHECK(a.X == b.X);
    CHECK(a.factors[0].labels() == b.factors[0].labels());
    cfg.seed = 124;
    CHECK(hdfe::simulate(cfg).X != a.X);
  }
}

TEST_CASE("extra regressors") {
  DgpConfig cfg;
  cfg.N = 10;
  cfg.T = 5;
  cfg.extra_regressors = 4;
  const auto data = hdfe::simulate(cfg);
  CHECK(data.p() == 7);
  CHECK(data.column_names.size() == 7);
}

TEST_CASE("counter generator") {
  hdfe::CounterRng a(5), b(5, 3);
  a();
  a();
  a();
  CHECK(a() == b());
  CHECK(hdfe::CounterRng(5)() != hdfe::CounterRng(6)());
}

TEST_CASE("configuration and names") {
  CHECK(hdfe::parse_design("logit2") == Design::TwoWayLogit);
  CHECK(hdfe::parse_design("ppml3") == Design::ThreeWayPpml);
  CHECK_THROWS(hdfe::parse_design("probit"));
  DgpConfig cfg;
  cfg.replications = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("digit agreement") {
  CHECK(hdfe::digits_agree(0.1234567, 0.1234599, 5));
  CHECK_FALSE(hdfe::digits_agree(0.1234567, 0.1234599, 8));
  for (double x : {0.0, -3.25, 1e-300, 6.02e23, 0.1}) {
    CHECK(hdfe::digits_agree(x, x, 16));
  }
  CHECK(hdfe::digits_agree(0.1234599, 0.1234567, 5));
  CHECK(hdfe::digits_agree(-1.000001, -1.0000012, 5));
  CHECK_FALSE(hdfe::digits_agree(1.0, -1.0, 5));
}

TEST_CASE("exactness report") {
  DgpConfig cfg;
  cfg.N = 30;
  cfg.T = 8;
  cfg.replications = 3;
  cfg.seed = 200;
  const std::vector<double> grid = {1e-8, 1e-3};
  const auto r = hdfe::run_exactness(cfg, grid);
  CHECK(r.replications.size() == 3);
  REQUIRE(r.beta_agreement.size() == hdfe::kDigitLevels.size());
  for (std::size_t t = 0; t < grid.size(); ++t) {
    for (std::size_t d = 0; d < r.digits.size(); ++d) {
      CHECK(r.beta_agreement[d][t] >= 0.0);
      CHECK(r.beta_agreement[d][t] <= 1.0);
      if (d > 0) {
        CHECK(r.beta_agreement[d][t] <= r.beta_agreement[d - 1][t]);
        CHECK(r.se_agreement[d][t] <= r.se_agreement[d - 1][t]);
      }
    }
  }
  CHECK(r.beta_agreement[0][0] == 1.0);
  CHECK(r.mean_ap_seconds.size() == 2);

  const auto again = hdfe::run_exactness(cfg, grid);
  CHECK(again.beta_agreement == r.beta_agreement);
  CHECK(again.replications[1].ap_beta[0] == r.replications[1].ap_beta[0]);
}

TEST_CASE("bench skips the dense engine above its guard") {
  DgpConfig cfg;
  cfg.N = 20;
  cfg.T = 5;
  cfg.replications = 1;
  const auto small = hdfe::run_bench(cfg, {1e-5});
  CHECK(small.mean_dummy_seconds.has_value());
  CHECK(small.mean_ap_seconds.size() == 1);

  cfg.N = 5000;
  cfg.T = 20;
  hdfe::ProtocolOptions opt;
  const auto big = hdfe::run_bench(cfg, {1e-3}, opt);
  CHECK_FALSE(big.mean_dummy_seconds.has_value());
}
