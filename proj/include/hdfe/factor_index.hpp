#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdfe/family.hpp"

namespace hdfe {

// A categorical column compiled to contiguous level ids. Levels are numbered
// by first appearance. Immutable after construction.
class FactorIndex {
 public:
  using Level = std::uint32_t;

  static FactorIndex build(std::span<const std::string> raw,
                           std::string name = {});
  // Builds from integer codes; labels are the decimal codes.
  static FactorIndex from_codes(std::span<const std::int64_t> codes,
                                std::string name = {});

  std::size_t size() const { return level_of_.size(); }
  std::size_t level_count() const { return labels_.size(); }
  Level level_of(std::size_t obs) const { return level_of_[obs]; }
  std::span<const Level> levels() const { return level_of_; }
  std::span<const std::size_t> members_of(Level level) const;
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& name() const { return name_; }

  // Restriction to the given observations, renumbering levels by first
  // appearance among the kept rows.
  FactorIndex subset(std::span<const std::size_t> rows) const;

 private:
  std::string name_;
  std::vector<Level> level_of_;
  std::vector<std::string> labels_;
  // CSR layout of members_of.
  std::vector<std::size_t> member_offsets_;
  std::vector<std::size_t> members_;

  void finalize_members();
};

struct GroupSums {
  Eigen::VectorXd weighted;  // per level: sum_j w_j v_j
  Eigen::VectorXd weights;   // per level: sum_j w_j
};

GroupSums group_sums(const FactorIndex& idx, const Eigen::VectorXd& v,
                     const Eigen::VectorXd& w);

// Estimation input: response, dense regressors and K >= 1 factors.
struct ModelData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<FactorIndex> factors;
  std::vector<std::string> column_names;
  std::string response_name = "y";

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t k() const { return factors.size(); }

  // Throws InvalidInput on shape violations.
  void validate() const;

  // Rows kept in the given order; factors are re-indexed.
  ModelData subset(std::span<const std::size_t> rows) const;
};

// Reciprocal condition estimate of X'X after scaling columns to unit norm;
// throws Collinearity naming a column when it falls below `rcond_floor`.
void check_full_rank(const ModelData& data, double rcond_floor = 1e-12);

// A level of some factor whose observations cannot contribute to the
// likelihood: all-zero responses (poisson), or all-zero / all-one (logit).
struct NoncontributingGroup {
  std::size_t factor;
  FactorIndex::Level level;
  std::string label;
  std::size_t observations;
};

std::vector<NoncontributingGroup> find_noncontributing(const ModelData& data,
                                                      const Family& family);

// Iteratively removes non-contributing groups until none remain. Returns the
// reduced data and the original indices of the kept rows.
std::pair<ModelData, std::vector<std::size_t>> drop_noncontributing(
    const ModelData& data, const Family& family);

}  // namespace hdfe
