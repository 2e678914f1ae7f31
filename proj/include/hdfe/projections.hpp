#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "hdfe/factor_index.hpp"

namespace hdfe {

enum class ApSchedule { NeumannHalperin, Cimmino };

ApSchedule parse_schedule(const std::string& name);
std::string schedule_name(ApSchedule schedule);

struct ApConfig {
  ApSchedule schedule = ApSchedule::NeumannHalperin;
  double tolerance = 1e-5;
  int max_sweeps = 100000;
  // Worker threads for ap_demean_frame; results do not depend on it.
  int threads = 1;

  void validate() const;
};

// Weights of one Newton iteration together with the factors they act on.
// Per-level weight sums are cached at construction.
class WeightedFrame {
 public:
  WeightedFrame(std::span<const FactorIndex> factors, Eigen::VectorXd w);

  std::size_t n() const { return static_cast<std::size_t>(w_.size()); }
  std::size_t k() const { return factors_.size(); }
  const Eigen::VectorXd& w() const { return w_; }
  const Eigen::VectorXd& sqrt_w() const { return sqrt_w_; }
  std::span<const FactorIndex> factors() const { return factors_; }
  const Eigen::VectorXd& inverse_level_weight(std::size_t k) const {
    return inv_level_weight_[k];
  }

 private:
  std::span<const FactorIndex> factors_;
  Eigen::VectorXd w_;
  Eigen::VectorXd sqrt_w_;
  std::vector<Eigen::VectorXd> inv_level_weight_;
};

// Applies the weighted one-category annihilator M_{D~_k}:
//   out_i = v_i - sqrt(w_i) * sum_{j in g} sqrt(w_j) v_j / sum_{j in g} w_j.
Eigen::VectorXd demean_one(const WeightedFrame& frame, std::size_t k,
                           const Eigen::VectorXd& v);

// In-place variant; `scratch` is resized as needed.
void demean_one_inplace(const WeightedFrame& frame, std::size_t k,
                        Eigen::Ref<Eigen::VectorXd> v,
                        Eigen::VectorXd& scratch);

struct ApResult {
  Eigen::VectorXd value;
  int sweeps = 0;
  double last_delta = 0.0;
};

// Approximates M_{D~} v by alternating projections. Stops once
// ||z_i - z_{i-1}|| / (1 + ||z_{i-1}||) < tolerance; throws ApNonConvergence
// after max_sweeps.
ApResult ap_demean(const WeightedFrame& frame, const ApConfig& cfg,
                   const Eigen::VectorXd& v);

struct FrameResult {
  Eigen::VectorXd nu_dd;
  Eigen::MatrixXd X_dd;
  int max_sweeps = 0;
};

// Demeans nu_tilde and every column of X_tilde independently. Columns are
// distributed over cfg.threads workers; output is schedule independent.
FrameResult ap_demean_frame(const WeightedFrame& frame, const ApConfig& cfg,
                            const Eigen::VectorXd& nu_tilde,
                            const Eigen::MatrixXd& X_tilde,
                            std::span<const std::string> column_names = {});

}  // namespace hdfe
