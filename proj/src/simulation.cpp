#include "hdfe/simulation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "hdfe/dummy_oracle.hpp"
#include "hdfe/error.hpp"
#include "hdfe/inference.hpp"

namespace hdfe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double logistic_draw(CounterRng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0);
  return std::log(u / (1.0 - u));
}

std::vector<std::string> regressor_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace

CounterRng::result_type CounterRng::hash(std::uint64_t seed,
                                         std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Design parse_design(const std::string& name) {
  if (name == "logit2") return Design::TwoWayLogit;
  if (name == "ppml3") return Design::ThreeWayPpml;
  throw InvalidInput("unknown design '" + name +
                     "' (expected logit2 or ppml3)");
}

std::string design_name(Design design) {
  return design == Design::TwoWayLogit ? "logit2" : "ppml3";
}

Family design_family(Design design) {
  return design == Design::TwoWayLogit ? Family::logit() : Family::poisson();
}

void DgpConfig::validate() const {
  if (N < 1 || T < 1) throw InvalidInput("N and T must be positive");
  if (replications < 1) throw InvalidInput("replications must be >= 1");
}

ModelData simulate_two_way_logit(const DgpConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.N;
  const std::size_t T = cfg.T;
  const auto n = static_cast<Eigen::Index>(N * T);
  const std::size_t p = 3 + cfg.extra_regressors;
  CounterRng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ModelData data;
  data.X.resize(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
    for (Eigen::Index r = 0; r < n; ++r) data.X(r, j) = normal(rng);
  }
  // Row r = i * T + t. Sum over the three design regressors of the
  // within-unit and within-period means.
  Eigen::VectorXd unit_mean = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd period_mean = Eigen::VectorXd::Zero(T);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto r = static_cast<Eigen::Index>(i * T + t);
      const double s = data.X.row(r).head(3).sum();
      unit_mean[i] += s / static_cast<double>(T);
      period_mean[t] += s / static_cast<double>(N);
    }
  }
  Eigen::VectorXd alpha(N);
  Eigen::VectorXd gamma(T);
  for (std::size_t i = 0; i < N; ++i) alpha[i] = unit_mean[i] + normal(rng);
  for (std::size_t t = 0; t < T; ++t) gamma[t] = period_mean[t] + normal(rng);

  const Eigen::Vector3d beta(1.0, -1.0, 1.0);
  data.y.resize(n);
  std::vector<std::int64_t> unit(n);
  std::vector<std::int64_t> period(n);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto r = static_cast<Eigen::Index>(i * T + t);
      const double latent = data.X.row(r).head(3).dot(beta) + alpha[i] +
                            gamma[t] + logistic_draw(rng);
      data.y[r] = latent > 0.0 ? 1.0 : 0.0;
      unit[r] = static_cast<std::int64_t>(i);
      period[r] = static_cast<std::int64_t>(t);
    }
  }
  data.factors.push_back(FactorIndex::from_codes(unit, "i"));
  data.factors.push_back(FactorIndex::from_codes(period, "t"));
  data.column_names = regressor_names(p);
  return data;
}

ModelData simulate_three_way_ppml(const DgpConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.N;
  const std::size_t T = cfg.T;
  const auto n = static_cast<Eigen::Index>(N * N * T);
  const std::size_t p = 2 + cfg.extra_regressors;
  CounterRng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ModelData data;
  data.X.resize(n, static_cast<Eigen::Index>(p));
  // Row r = (i * N + j) * T + t.
  for (Eigen::Index r = 0; r < n; ++r) data.X(r, 0) = normal(rng);
  for (Eigen::Index r = 0; r < n; ++r) {
    data.X(r, 1) = normal(rng) > 0.0 ? 1.0 : 0.0;
  }
  for (Eigen::Index j = 2; j < data.X.cols(); ++j) {
    for (Eigen::Index r = 0; r < n; ++r) data.X(r, j) = normal(rng);
  }

  Eigen::VectorXd exp_time = Eigen::VectorXd::Zero(N * T);
  Eigen::VectorXd imp_time = Eigen::VectorXd::Zero(N * T);
  Eigen::VectorXd pair = Eigen::VectorXd::Zero(N * N);
  auto row = [&](std::size_t i, std::size_t j, std::size_t t) {
    return static_cast<Eigen::Index>((i * N + j) * T + t);
  };
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        const double x = data.X(row(i, j, t), 0);
        exp_time[i * T + t] += x / static_cast<double>(N);
        imp_time[j * T + t] += x / static_cast<double>(N);
        pair[i * N + j] += x / static_cast<double>(T);
      }
    }
  }
  for (Eigen::Index g = 0; g < exp_time.size(); ++g) exp_time[g] += normal(rng);
  for (Eigen::Index g = 0; g < imp_time.size(); ++g) imp_time[g] += normal(rng);
  for (Eigen::Index g = 0; g < pair.size(); ++g) pair[g] += normal(rng);

  data.y.resize(n);
  std::vector<std::int64_t> f1(n), f2(n), f3(n);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto r = row(i, j, t);
        const double eta = exp_time[i * T + t] + imp_time[j * T + t] +
                           pair[i * N + j] + data.X(r, 0) + data.X(r, 1);
        data.y[r] = std::exp(eta + normal(rng));
        f1[r] = static_cast<std::int64_t>(i * T + t);
        f2[r] = static_cast<std::int64_t>(j * T + t);
        f3[r] = static_cast<std::int64_t>(i * N + j);
      }
    }
  }
  data.factors.push_back(FactorIndex::from_codes(f1, "exp_time"));
  data.factors.push_back(FactorIndex::from_codes(f2, "imp_time"));
  data.factors.push_back(FactorIndex::from_codes(f3, "pair"));
  data.column_names = regressor_names(p);
  return data;
}

ModelData simulate(const DgpConfig& cfg) {
  return cfg.design == Design::TwoWayLogit ? simulate_two_way_logit(cfg)
                                           : simulate_three_way_ppml(cfg);
}

bool digits_agree(double a, double b, int digits) {
  if (digits < 1) throw InvalidInput("digits must be positive");
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  // printf rounds correctly to the requested number of significant digits.
  char ba[64];
  char bb[64];
  std::snprintf(ba, sizeof ba, "%.*e", digits - 1, a + 0.0);
  std::snprintf(bb, sizeof bb, "%.*e", digits - 1, b + 0.0);
  return std::string(ba) == std::string(bb);
}

ExactnessReport run_exactness(const DgpConfig& cfg,
                              const std::vector<double>& tolerance_grid,
                              const ProtocolOptions& options) {
  cfg.validate();
  if (tolerance_grid.empty()) throw InvalidInput("empty tolerance grid");
  const Family family = design_family(cfg.design);
  ExactnessReport report;
  report.config = cfg;
  report.tolerances = tolerance_grid;
  const std::size_t nt = tolerance_grid.size();

  for (int rep = 0; rep < cfg.replications; ++rep) {
    DgpConfig rc = cfg;
    rc.seed = cfg.seed + static_cast<std::uint64_t>(rep);
    ReplicationOutcome out;
    out.seed = rc.seed;
    try {
      ModelData data = simulate(rc);
      if (options.drop_noncontributing) {
        data = drop_noncontributing(data, family).first;
      }
      out.observations = data.n();
      auto start = Clock::now();
      const DummyFit dummy = fit_dummy(data, family, options.newton);
      out.dummy_seconds = seconds_since(start);
      out.dummy_beta = dummy.beta;
      out.dummy_se = dummy.beta_vcov.diagonal().cwiseSqrt();
      for (double tol : tolerance_grid) {
        ApConfig ap = options.ap;
        ap.tolerance = tol;
        start = Clock::now();
        const FitResult f = fit(data, family, ap, options.newton);
        out.ap_seconds.push_back(seconds_since(start));
        out.ap_beta.push_back(f.beta);
        out.ap_se.push_back(standard_errors(vcov_hessian(f.X_dd)));
        out.gradient_norm.push_back(
            (f.X_dd.transpose() * f.nu_dd).cwiseAbs().maxCoeff());
      }
    } catch (const Error& e) {
      out.failed = true;
      out.error = e.what();
    }
    report.replications.push_back(std::move(out));
  }

  const std::size_t nd = report.digits.size();
  report.beta_agreement.assign(nd, std::vector<double>(nt, 0.0));
  report.se_agreement.assign(nd, std::vector<double>(nt, 0.0));
  report.mean_ap_seconds.assign(nt, 0.0);
  int ok = 0;
  for (const auto& r : report.replications) {
    if (r.failed) {
      ++report.failed;
      continue;
    }
    ++ok;
    report.mean_dummy_seconds += r.dummy_seconds;
    for (std::size_t t = 0; t < nt; ++t) {
      report.mean_ap_seconds[t] += r.ap_seconds[t];
      for (std::size_t d = 0; d < nd; ++d) {
        report.beta_agreement[d][t] +=
            digits_agree(r.ap_beta[t][0], r.dummy_beta[0], report.digits[d]);
        report.se_agreement[d][t] +=
            digits_agree(r.ap_se[t][0], r.dummy_se[0], report.digits[d]);
      }
    }
  }
  if (ok > 0) {
    report.mean_dummy_seconds /= ok;
    for (std::size_t t = 0; t < nt; ++t) {
      report.mean_ap_seconds[t] /= ok;
      for (std::size_t d = 0; d < nd; ++d) {
        report.beta_agreement[d][t] /= ok;
        report.se_agreement[d][t] /= ok;
      }
    }
  }
  return report;
}

BenchReport run_bench(const DgpConfig& cfg,
                      const std::vector<double>& tolerance_grid,
                      const ProtocolOptions& options) {
  cfg.validate();
  if (tolerance_grid.empty()) throw InvalidInput("empty tolerance grid");
  const Family family = design_family(cfg.design);
  BenchReport report;
  report.config = cfg;
  report.tolerances = tolerance_grid;
  const std::size_t nt = tolerance_grid.size();
  report.mean_ap_seconds.assign(nt, 0.0);
  report.mean_ap_iterations.assign(nt, 0.0);
  double dummy_total = 0.0;
  bool dummy_ran = false;
  int ok = 0;
  for (int rep = 0; rep < cfg.replications; ++rep) {
    DgpConfig rc = cfg;
    rc.seed = cfg.seed + static_cast<std::uint64_t>(rep);
    try {
      ModelData data = simulate(rc);
      if (options.drop_noncontributing) {
        data = drop_noncontributing(data, family).first;
      }
      std::vector<double> secs(nt);
      std::vector<double> iters(nt);
      for (std::size_t t = 0; t < nt; ++t) {
        ApConfig ap = options.ap;
        ap.tolerance = tolerance_grid[t];
        const auto start = Clock::now();
        const FitResult f = fit(data, family, ap, options.newton);
        secs[t] = seconds_since(start);
        iters[t] = f.iterations;
      }
      double dummy_secs = 0.0;
      const bool run_dummy = dummy_fits_guard(data);
      if (run_dummy) {
        const auto start = Clock::now();
        fit_dummy(data, family, options.newton);
        dummy_secs = seconds_since(start);
      }
      for (std::size_t t = 0; t < nt; ++t) {
        report.mean_ap_seconds[t] += secs[t];
        report.mean_ap_iterations[t] += iters[t];
      }
      dummy_total += dummy_secs;
      dummy_ran = dummy_ran || run_dummy;
      ++ok;
    } catch (const Error&) {
      ++report.failed;
    }
  }
  if (ok > 0) {
    for (std::size_t t = 0; t < nt; ++t) {
      report.mean_ap_seconds[t] /= ok;
      report.mean_ap_iterations[t] /= ok;
    }
    if (dummy_ran) report.mean_dummy_seconds = dummy_total / ok;
  }
  return report;
}

}  // namespace hdfe
