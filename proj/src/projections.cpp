#include "hdfe/projections.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hdfe/error.hpp"

namespace hdfe {

ApSchedule parse_schedule(const std::string& name) {
  if (name == "nh" || name == "neumann-halperin") {
    return ApSchedule::NeumannHalperin;
  }
  if (name == "cimmino") return ApSchedule::Cimmino;
  throw InvalidInput("unknown AP schedule '" + name +
                     "' (expected nh or cimmino)");
}

std::string schedule_name(ApSchedule schedule) {
  return schedule == ApSchedule::NeumannHalperin ? "nh" : "cimmino";
}

void ApConfig::validate() const {
  if (!(tolerance > 0.0)) throw InvalidInput("AP tolerance must be positive");
  if (max_sweeps < 1) throw InvalidInput("AP max_sweeps must be at least 1");
  if (threads < 1) throw InvalidInput("thread count must be at least 1");
}

WeightedFrame::WeightedFrame(std::span<const FactorIndex> factors,
                             Eigen::VectorXd w)
    : factors_(factors), w_(std::move(w)) {
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (!(w_[i] > 0.0) || !std::isfinite(w_[i])) {
      throw DegenerateWeight(static_cast<std::size_t>(i), w_[i]);
    }
  }
  sqrt_w_ = w_.array().sqrt().matrix();
  inv_level_weight_.reserve(factors_.size());
  for (const auto& f : factors_) {
    if (static_cast<Eigen::Index>(f.size()) != w_.size()) {
      throw InvalidInput("weights and factor '" + f.name() +
                         "' differ in length");
    }
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(f.level_count());
    const auto levels = f.levels();
    for (Eigen::Index i = 0; i < w_.size(); ++i) sums[levels[i]] += w_[i];
    // Every level is non-empty and every weight positive.
    inv_level_weight_.push_back(sums.cwiseInverse());
  }
}

void demean_one_inplace(const WeightedFrame& frame, std::size_t k,
                        Eigen::Ref<Eigen::VectorXd> v,
                        Eigen::VectorXd& scratch) {
  const auto& f = frame.factors()[k];
  const auto& sw = frame.sqrt_w();
  const auto& inv = frame.inverse_level_weight(k);
  const auto levels = f.levels();
  const auto n = v.size();
  scratch.setZero(static_cast<Eigen::Index>(f.level_count()));
  for (Eigen::Index i = 0; i < n; ++i) scratch[levels[i]] += sw[i] * v[i];
  for (Eigen::Index l = 0; l < scratch.size(); ++l) scratch[l] *= inv[l];
  for (Eigen::Index i = 0; i < n; ++i) v[i] -= sw[i] * scratch[levels[i]];
}

Eigen::VectorXd demean_one(const WeightedFrame& frame, std::size_t k,
                           const Eigen::VectorXd& v) {
  if (k >= frame.k()) throw InvalidInput("category index out of range");
  if (static_cast<std::size_t>(v.size()) != frame.n()) {
    throw InvalidInput("demean_one: vector length does not match frame");
  }
  Eigen::VectorXd out = v;
  Eigen::VectorXd scratch;
  demean_one_inplace(frame, k, out, scratch);
  return out;
}

ApResult ap_demean(const WeightedFrame& frame, const ApConfig& cfg,
                   const Eigen::VectorXd& v) {
  cfg.validate();
  if (static_cast<std::size_t>(v.size()) != frame.n()) {
    throw InvalidInput("ap_demean: vector length does not match frame");
  }
  const std::size_t K = frame.k();
  ApResult out;
  Eigen::VectorXd z = v;
  Eigen::VectorXd prev(v.size());
  Eigen::VectorXd scratch;
  Eigen::VectorXd work;
  Eigen::VectorXd sum;
  double delta = 0.0;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    prev = z;
    if (cfg.schedule == ApSchedule::NeumannHalperin || K == 1) {
      for (std::size_t k = 0; k < K; ++k) {
        demean_one_inplace(frame, k, z, scratch);
      }
    } else {
      sum.setZero(v.size());
      for (std::size_t k = 0; k < K; ++k) {
        work = prev;
        demean_one_inplace(frame, k, work, scratch);
        sum += work;
      }
      z = sum / static_cast<double>(K);
    }
    delta = (z - prev).norm() / (1.0 + prev.norm());
    if (delta < cfg.tolerance) {
      out.value = std::move(z);
      out.sweeps = sweep;
      out.last_delta = delta;
      return out;
    }
  }
  throw ApNonConvergence(cfg.max_sweeps, delta);
}

FrameResult ap_demean_frame(const WeightedFrame& frame, const ApConfig& cfg,
                            const Eigen::VectorXd& nu_tilde,
                            const Eigen::MatrixXd& X_tilde,
                            std::span<const std::string> column_names) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(frame.n());
  if (nu_tilde.size() != n || X_tilde.rows() != n) {
    throw InvalidInput("ap_demean_frame: input length does not match frame");
  }
  const auto p = X_tilde.cols();
  FrameResult out;
  out.X_dd.resize(n, p);
  std::vector<int> sweeps(static_cast<std::size_t>(p + 1), 0);

  // Target 0 is nu_tilde, target j+1 is column j.
  auto run = [&](Eigen::Index target) {
    if (target == 0) {
      auto r = ap_demean(frame, cfg, nu_tilde);
      out.nu_dd = std::move(r.value);
      sweeps[0] = r.sweeps;
      return;
    }
    const auto j = target - 1;
    try {
      auto r = ap_demean(frame, cfg, X_tilde.col(j));
      out.X_dd.col(j) = r.value;
      sweeps[static_cast<std::size_t>(target)] = r.sweeps;
    } catch (Error& e) {
      e.add_context("column '" +
                    (static_cast<std::size_t>(j) < column_names.size()
                         ? column_names[j]
                         : std::to_string(j)) +
                    "'");
      throw;
    }
  };

  const int workers =
      static_cast<int>(std::min<Eigen::Index>(cfg.threads, p + 1));
  if (workers <= 1) {
    for (Eigen::Index t = 0; t <= p; ++t) run(t);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (Eigen::Index target = next++; target <= p; target = next++) {
            try {
              run(target);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  out.max_sweeps = *std::max_element(sweeps.begin(), sweeps.end());
  return out;
}

}  // namespace hdfe
