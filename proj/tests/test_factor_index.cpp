#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hdfe/error.hpp"
#include "hdfe/factor_index.hpp"
#include "oracles.hpp"

using hdfe::FactorIndex;

TEST_CASE("levels are numbered by first appearance") {
  const std::vector<std::string> raw = {"a", "b", "a"};
  const auto idx = FactorIndex::build(raw);
  CHECK(idx.level_count() == 2);
  CHECK(idx.level_of(0) == 0);
  CHECK(idx.level_of(1) == 1);
  CHECK(idx.level_of(2) == 0);
  CHECK(idx.labels() == std::vector<std::string>{"a", "b"});
  const auto m0 = idx.members_of(0);
  CHECK(std::vector<std::size_t>(m0.begin(), m0.end()) ==
        std::vector<std::size_t>{0, 2});
}

TEST_CASE("singleton and empty columns") {
  const std::vector<std::string> one = {"x"};
  const auto idx = FactorIndex::build(one);
  CHECK(idx.level_count() == 1);
  CHECK(idx.members_of(0).size() == 1);
  CHECK(idx.members_of(0)[0] == 0);
  CHECK_THROWS_AS(FactorIndex::build(std::vector<std::string>{}),
                  hdfe::InvalidInput);
}

TEST_CASE("panel of 250 units by 50 periods") {
  std::vector<std::string> unit, period;
  for (int i = 0; i < 250; ++i) {
    for (int t = 0; t < 50; ++t) {
      unit.push_back("u" + std::to_string(i));
      period.push_back("t" + std::to_string(t));
    }
  }
  CHECK(unit.size() == 12500);
  CHECK(FactorIndex::build(unit).level_count() == 250);
  CHECK(FactorIndex::build(period).level_count() == 50);
}

TEST_CASE("members partition the observations") {
  std::mt19937_64 rng(1);
  const auto fs = oracle::random_factors(rng, 300, {17});
  const auto& f = fs[0];
  std::vector<int> seen(300, 0);
  std::size_t total = 0;
  for (FactorIndex::Level l = 0; l < f.level_count(); ++l) {
    CHECK(f.members_of(l).size() >= 1);
    for (auto i : f.members_of(l)) {
      ++seen[i];
      CHECK(f.level_of(i) == l);
    }
    total += f.members_of(l).size();
  }
  CHECK(total == 300);
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("relabelling levels preserves the partition") {
  std::mt19937_64 rng(2);
  std::vector<std::string> raw;
  for (int i = 0; i < 200; ++i) raw.push_back(std::to_string(rng() % 13));
  std::map<std::string, std::string> relabel;
  std::vector<int> ids(13);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int k = 0; k < 13; ++k) {
    relabel[std::to_string(k)] = "z" + std::to_string(ids[k]);
  }
  std::vector<std::string> renamed;
  for (const auto& r : raw) renamed.push_back(relabel[r]);
  const auto a = FactorIndex::build(raw);
  const auto b = FactorIndex::build(renamed);
  auto groups = [](const FactorIndex& f) {
    std::set<std::vector<std::size_t>> g;
    for (FactorIndex::Level l = 0; l < f.level_count(); ++l) {
      auto m = f.members_of(l);
      g.emplace(m.begin(), m.end());
    }
    return g;
  };
  CHECK(groups(a) == groups(b));
}

TEST_CASE("group sums") {
  const auto idx = FactorIndex::from_codes(std::vector<std::int64_t>{0, 0, 1});
  Eigen::VectorXd v(3), w = Eigen::VectorXd::Ones(3);
  v << 1, 2, 3;
  auto s = hdfe::group_sums(idx, v, w);
  CHECK(s.weighted[0] == 3.0);
  CHECK(s.weighted[1] == 3.0);
  CHECK(s.weights[0] == 2.0);
  CHECK(s.weights[1] == 1.0);
  s = hdfe::group_sums(idx, Eigen::VectorXd::Zero(3), w);
  CHECK(s.weighted.isZero(0.0));
  CHECK_THROWS_AS(hdfe::group_sums(idx, Eigen::VectorXd::Zero(2), w),
                  hdfe::InvalidInput);
}

TEST_CASE("group sums match the naive double loop") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto fs = oracle::random_factors(rng, 150, {9});
    const auto v = oracle::random_normal(rng, 150);
    const auto w = oracle::random_weights(rng, 150);
    const auto s = hdfe::group_sums(fs[0], v, w);
    const auto [ns, nw] = oracle::naive_group_sums(fs[0], v, w);
    for (Eigen::Index l = 0; l < ns.size(); ++l) {
      CHECK(std::abs(s.weighted[l] - ns[l]) <= 1e-14 * (1 + std::abs(ns[l])));
      CHECK(std::abs(s.weights[l] - nw[l]) <= 1e-14 * (1 + std::abs(nw[l])));
    }
  }
}

TEST_CASE("group sums are additive") {
  std::mt19937_64 rng(4);
  const auto fs = oracle::random_factors(rng, 120, {7});
  const auto v1 = oracle::random_normal(rng, 120);
  const auto v2 = oracle::random_normal(rng, 120);
  const auto w = oracle::random_weights(rng, 120);
  const auto a = hdfe::group_sums(fs[0], v1, w);
  const auto b = hdfe::group_sums(fs[0], v2, w);
  const auto c = hdfe::group_sums(fs[0], v1 + v2, w);
  for (Eigen::Index l = 0; l < c.weighted.size(); ++l) {
    CHECK(c.weighted[l] == doctest::Approx(a.weighted[l] + b.weighted[l])
                               .epsilon(1e-12)
                               .scale(1.0));
  }
}

TEST_CASE("full-rank check on the regressors") {
  hdfe::ModelData data;
  data.y = Eigen::VectorXd::Zero(5);
  data.X.resize(5, 3);
  data.X.col(0) << 1, 2, 3, 4, 5;
  data.X.col(1) << 0, 1, 0, 1, 0;
  data.X.col(2) = 2.0 * data.X.col(0) - data.X.col(1);
  data.column_names = {"a", "b", "c"};
  data.factors.push_back(
      FactorIndex::from_codes(std::vector<std::int64_t>{0, 0, 0, 1, 1}));
  CHECK_THROWS_AS(hdfe::check_full_rank(data), hdfe::Collinearity);
  data.X.col(2) << 1, -1, 2, 0, 7;
  CHECK_NOTHROW(hdfe::check_full_rank(data));
  // Badly scaled but full-rank columns pass.
  data.X.col(0) *= 1e9;
  CHECK_NOTHROW(hdfe::check_full_rank(data));
}

TEST_CASE("model data validation") {
  hdfe::ModelData data;
  data.y = Eigen::VectorXd::Zero(4);
  data.X = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(data.validate(), hdfe::InvalidInput);
  data.X = Eigen::MatrixXd::Ones(4, 1);
  CHECK_THROWS_AS(data.validate(), hdfe::InvalidInput);  // no factors
  data.factors.push_back(
      FactorIndex::from_codes(std::vector<std::int64_t>{0, 1, 0, 1}));
  CHECK_NOTHROW(data.validate());
}

TEST_CASE("non-contributing groups are listed and dropped iteratively") {
  // Poisson: unit 1 has all-zero responses.
  hdfe::ModelData data;
  data.y.resize(6);
  data.y << 1, 2, 0, 0, 3, 0;
  data.X = Eigen::MatrixXd::Ones(6, 1);
  data.factors.push_back(FactorIndex::from_codes(
      std::vector<std::int64_t>{0, 0, 1, 1, 2, 2}, "unit"));
  auto groups = hdfe::find_noncontributing(data, hdfe::Family::poisson());
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].label == "1");
  CHECK(groups[0].observations == 2);
  auto [reduced, kept] =
      hdfe::drop_noncontributing(data, hdfe::Family::poisson());
  CHECK(reduced.n() == 4);
  CHECK(kept == std::vector<std::size_t>{0, 1, 4, 5});

  // Logit: dropping unit 0 (all ones) leaves period 2 with a single zero,
  // which is removed in a second pass.
  hdfe::ModelData logit;
  logit.y.resize(10);
  logit.y << 1, 1, 1, 1, 0, 0, 1, 0, 1, 0;
  logit.X = Eigen::MatrixXd::Ones(10, 1);
  logit.factors.push_back(FactorIndex::from_codes(
      std::vector<std::int64_t>{0, 0, 0, 1, 1, 2, 2, 3, 3, 3}, "unit"));
  logit.factors.push_back(FactorIndex::from_codes(
      std::vector<std::int64_t>{0, 1, 2, 0, 1, 0, 1, 0, 1, 2}, "period"));
  CHECK(hdfe::find_noncontributing(logit, hdfe::Family::logit()).size() == 1);
  auto [lr, lk] = hdfe::drop_noncontributing(logit, hdfe::Family::logit());
  CHECK(hdfe::find_noncontributing(lr, hdfe::Family::logit()).empty());
  CHECK(lk == std::vector<std::size_t>{3, 4, 5, 6, 7, 8});
  CHECK(lr.factors[1].level_count() == 2);
}
