#include "hdfe/family.hpp"

#include <cmath>

#include "hdfe/error.hpp"

namespace hdfe {

namespace {

void check_finite(const Eigen::VectorXd& eta) {
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta[i])) {
      throw InvalidInput("non-finite linear predictor at observation " +
                         std::to_string(i));
    }
  }
}

double logistic(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

double log1p_exp(double x) {
  if (x > 0.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

Family Family::parse(std::string_view name) {
  if (name == "logit") return logit();
  if (name == "poisson") return poisson();
  throw InvalidInput("unknown family '" + std::string(name) +
                     "' (expected logit or poisson)");
}

std::string Family::name() const {
  return kind_ == Kind::Logit ? "logit" : "poisson";
}

Eigen::VectorXd Family::inverse_link(const Eigen::VectorXd& eta) const {
  check_finite(eta);
  if (kind_ == Kind::Logit) {
    return eta.unaryExpr([](double e) { return logistic(e); });
  }
  return eta.array().exp().matrix();
}

Eigen::VectorXd Family::variance(const Eigen::VectorXd& mu) const {
  if (kind_ == Kind::Logit) {
    return (mu.array() * (1.0 - mu.array())).matrix();
  }
  return mu;
}

void Family::check_response(const Eigen::VectorXd& y) const {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    const bool ok = kind_ == Kind::Logit ? (v == 0.0 || v == 1.0)
                                         : (std::isfinite(v) && v >= 0.0);
    if (!ok) {
      throw InvalidInput("response " + std::to_string(v) +
                         " at observation " + std::to_string(i) +
                         " is outside the " + name() + " support");
    }
  }
}

Family::Working Family::working_quantities(const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& eta) const {
  if (y.size() != eta.size()) {
    throw InvalidInput("response and linear predictor lengths differ");
  }
  check_response(y);
  Working out;
  out.mu = inverse_link(eta);
  // Canonical link: d mu / d eta = V(mu), hence w = V(mu) and
  // nu = (y - mu) / V(mu).
  out.w = variance(out.mu);
  out.nu.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double w = out.w[i];
    if (!(w >= kWeightFloor)) {
      throw DegenerateWeight(static_cast<std::size_t>(i), w);
    }
    out.nu[i] = (y[i] - out.mu[i]) / w;
  }
  return out;
}

double Family::log_likelihood(const Eigen::VectorXd& y,
                              const Eigen::VectorXd& eta) const {
  if (y.size() != eta.size()) {
    throw InvalidInput("response and linear predictor lengths differ");
  }
  check_response(y);
  check_finite(eta);
  double ll = 0.0;
  if (kind_ == Kind::Logit) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      ll += y[i] * eta[i] - log1p_exp(eta[i]);
    }
  } else {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      ll += y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y[i] + 1.0);
    }
  }
  return ll;
}

}  // namespace hdfe
