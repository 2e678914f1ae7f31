#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdfe/estimator.hpp"
#include "hdfe/factor_index.hpp"
#include "hdfe/projections.hpp"

namespace hdfe {

// Counter-based 64-bit generator: the k-th output is a SplitMix64 hash of
// seed and k, so any draw is reproducible from (seed, k) alone.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return hash(seed_, counter_++); }

  static result_type hash(std::uint64_t seed, std::uint64_t counter);
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

enum class Design { TwoWayLogit, ThreeWayPpml };

Design parse_design(const std::string& name);
std::string design_name(Design design);

struct DgpConfig {
  Design design = Design::TwoWayLogit;
  std::size_t N = 50;
  std::size_t T = 10;
  std::uint64_t seed = 7;
  int replications = 10;
  // Extra iid standard-normal regressors appended after the design's own.
  std::size_t extra_regressors = 0;

  void validate() const;
};

// y_it = 1[x_it'beta + alpha_i + gamma_t + e_it > 0], three standard-normal
// regressors, beta = (1, -1, 1), logistic errors.
ModelData simulate_two_way_logit(const DgpConfig& cfg);

// Y_ijt = exp(alpha_it + gamma_jt + delta_ij + x_ijt + d_ijt) * e_ijt with
// log e ~ N(0, 1) and d = 1[psi > 0].
ModelData simulate_three_way_ppml(const DgpConfig& cfg);

ModelData simulate(const DgpConfig& cfg);
Family design_family(Design design);

// True when a and b round to the same value at `digits` significant digits.
bool digits_agree(double a, double b, int digits);

inline const std::vector<int> kDigitLevels = {5, 8, 16};

struct ReplicationOutcome {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::size_t observations = 0;
  Eigen::VectorXd dummy_beta;
  Eigen::VectorXd dummy_se;
  double dummy_seconds = 0.0;
  // Indexed by tolerance.
  std::vector<Eigen::VectorXd> ap_beta;
  std::vector<Eigen::VectorXd> ap_se;
  std::vector<double> ap_seconds;
  std::vector<double> gradient_norm;  // ||X_dd' nu_dd||_inf
};

struct ExactnessReport {
  DgpConfig config;
  std::vector<double> tolerances;
  std::vector<int> digits = kDigitLevels;
  // [digit][tolerance] agreement frequency over successful replications.
  std::vector<std::vector<double>> beta_agreement;
  std::vector<std::vector<double>> se_agreement;
  double mean_dummy_seconds = 0.0;
  std::vector<double> mean_ap_seconds;
  int failed = 0;
  std::vector<ReplicationOutcome> replications;
};

struct ProtocolOptions {
  ApConfig ap;  // tolerance overridden per grid entry
  NewtonConfig newton;
  bool drop_noncontributing = true;
};

ExactnessReport run_exactness(const DgpConfig& cfg,
                              const std::vector<double>& tolerance_grid,
                              const ProtocolOptions& options = {});

struct BenchReport {
  DgpConfig config;
  std::vector<double> tolerances;
  // Empty when the dense oracle exceeds its size guard.
  std::optional<double> mean_dummy_seconds;
  std::vector<double> mean_ap_seconds;
  std::vector<double> mean_ap_iterations;
  int failed = 0;
};

BenchReport run_bench(const DgpConfig& cfg,
                      const std::vector<double>& tolerance_grid,
                      const ProtocolOptions& options = {});

}  // namespace hdfe
