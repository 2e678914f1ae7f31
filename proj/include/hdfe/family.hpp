#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace hdfe {

// Exponential-family response at its canonical link (theta == eta).
// Dispersion is fixed at one for both kinds.
class Family {
 public:
  enum class Kind { Logit, Poisson };

  explicit Family(Kind kind) : kind_(kind) {}

  static Family logit() { return Family(Kind::Logit); }
  static Family poisson() { return Family(Kind::Poisson); }
  static Family parse(std::string_view name);

  Kind kind() const { return kind_; }
  std::string name() const;
  double dispersion() const { return 1.0; }

  // Smallest admissible Newton weight; anything below is reported as
  // degenerate instead of being clamped.
  static constexpr double kWeightFloor = 1e-12;

  Eigen::VectorXd inverse_link(const Eigen::VectorXd& eta) const;
  Eigen::VectorXd variance(const Eigen::VectorXd& mu) const;

  // Validates y against the family's support.
  void check_response(const Eigen::VectorXd& y) const;

  // Per-observation Newton weights w and working residuals nu at eta.
  struct Working {
    Eigen::VectorXd mu;
    Eigen::VectorXd w;
    Eigen::VectorXd nu;
  };
  Working working_quantities(const Eigen::VectorXd& y,
                             const Eigen::VectorXd& eta) const;

  double log_likelihood(const Eigen::VectorXd& y,
                        const Eigen::VectorXd& eta) const;

  bool operator==(const Family&) const = default;

 private:
  Kind kind_;
};

// log(1 + exp(x)) without overflow.
double log1p_exp(double x);

}  // namespace hdfe
