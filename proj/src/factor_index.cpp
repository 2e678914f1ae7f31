#include "hdfe/factor_index.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hdfe/error.hpp"

namespace hdfe {

FactorIndex FactorIndex::build(std::span<const std::string> raw,
                               std::string name) {
  if (raw.empty()) {
    throw InvalidInput("cannot build a factor index from an empty column" +
                       (name.empty() ? std::string() : " '" + name + "'"));
  }
  FactorIndex idx;
  idx.name_ = std::move(name);
  idx.level_of_.reserve(raw.size());
  std::unordered_map<std::string_view, Level> seen;
  seen.reserve(raw.size() / 4 + 1);
  for (const auto& label : raw) {
    auto [it, inserted] =
        seen.try_emplace(label, static_cast<Level>(idx.labels_.size()));
    if (inserted) idx.labels_.push_back(label);
    idx.level_of_.push_back(it->second);
  }
  idx.finalize_members();
  return idx;
}

FactorIndex FactorIndex::from_codes(std::span<const std::int64_t> codes,
                                    std::string name) {
  std::vector<std::string> raw;
  raw.reserve(codes.size());
  for (auto c : codes) raw.push_back(std::to_string(c));
  return build(raw, std::move(name));
}

void FactorIndex::finalize_members() {
  const std::size_t levels = labels_.size();
  member_offsets_.assign(levels + 1, 0);
  for (auto l : level_of_) ++member_offsets_[l + 1];
  for (std::size_t l = 0; l < levels; ++l) {
    member_offsets_[l + 1] += member_offsets_[l];
  }
  members_.resize(level_of_.size());
  std::vector<std::size_t> cursor(member_offsets_.begin(),
                                  member_offsets_.end() - 1);
  for (std::size_t i = 0; i < level_of_.size(); ++i) {
    members_[cursor[level_of_[i]]++] = i;
  }
}

std::span<const std::size_t> FactorIndex::members_of(Level level) const {
  return std::span<const std::size_t>(members_).subspan(
      member_offsets_[level],
      member_offsets_[level + 1] - member_offsets_[level]);
}

FactorIndex FactorIndex::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> raw;
  raw.reserve(rows.size());
  for (auto r : rows) raw.push_back(labels_[level_of_[r]]);
  return build(raw, name_);
}

GroupSums group_sums(const FactorIndex& idx, const Eigen::VectorXd& v,
                     const Eigen::VectorXd& w) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  if (v.size() != n || w.size() != n) {
    throw InvalidInput("group_sums: vector length does not match the index");
  }
  GroupSums out;
  out.weighted = Eigen::VectorXd::Zero(idx.level_count());
  out.weights = Eigen::VectorXd::Zero(idx.level_count());
  const auto levels = idx.levels();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto l = levels[i];
    out.weighted[l] += w[i] * v[i];
    out.weights[l] += w[i];
  }
  return out;
}

void ModelData::validate() const {
  const auto rows = y.size();
  if (rows == 0) throw InvalidInput("model data has no observations");
  if (X.rows() != rows) {
    throw InvalidInput("regressor matrix has " + std::to_string(X.rows()) +
                       " rows, response has " + std::to_string(rows));
  }
  if (factors.empty()) {
    throw InvalidInput("at least one fixed-effect factor is required");
  }
  for (const auto& f : factors) {
    if (static_cast<Eigen::Index>(f.size()) != rows) {
      throw InvalidInput("factor '" + f.name() + "' has " +
                         std::to_string(f.size()) + " rows, response has " +
                         std::to_string(rows));
    }
  }
  if (!column_names.empty() &&
      column_names.size() != static_cast<std::size_t>(X.cols())) {
    throw InvalidInput("column name count does not match regressor count");
  }
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!std::isfinite(X(i, j))) {
        throw InvalidInput("non-finite regressor value at row " +
                           std::to_string(i) + ", column " +
                           std::to_string(j));
      }
    }
  }
}

ModelData ModelData::subset(std::span<const std::size_t> rows) const {
  ModelData out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.X.resize(m, X.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    out.y[r] = y[static_cast<Eigen::Index>(rows[r])];
    out.X.row(r) = X.row(static_cast<Eigen::Index>(rows[r]));
  }
  out.factors.reserve(factors.size());
  for (const auto& f : factors) out.factors.push_back(f.subset(rows));
  out.column_names = column_names;
  out.response_name = response_name;
  return out;
}

void check_full_rank(const ModelData& data, double rcond_floor) {
  const auto p = data.X.cols();
  if (p == 0) return;
  Eigen::MatrixXd scaled = data.X;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = scaled.col(j).norm();
    if (norm == 0.0) {
      throw Collinearity(j, "regressor column " + std::to_string(j) +
                                " is identically zero");
    }
    scaled.col(j) /= norm;
  }
  const Eigen::MatrixXd gram = scaled.transpose() * scaled;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success && llt.rcond() >= rcond_floor) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  const auto rank = qr.rank();
  const auto offending =
      qr.colsPermutation().indices()[std::min<Eigen::Index>(rank, p - 1)];
  std::string name = static_cast<std::size_t>(offending) <
                             data.column_names.size()
                         ? data.column_names[offending]
                         : std::to_string(offending);
  throw Collinearity(offending, "regressor matrix is rank deficient; column '" +
                                    name + "' is collinear with the others");
}

std::vector<NoncontributingGroup> find_noncontributing(const ModelData& data,
                                                      const Family& family) {
  std::vector<NoncontributingGroup> out;
  for (std::size_t k = 0; k < data.factors.size(); ++k) {
    const auto& f = data.factors[k];
    for (FactorIndex::Level l = 0; l < f.level_count(); ++l) {
      const auto members = f.members_of(l);
      bool all_zero = true;
      bool all_one = true;
      for (auto i : members) {
        const double v = data.y[static_cast<Eigen::Index>(i)];
        all_zero = all_zero && v == 0.0;
        all_one = all_one && v == 1.0;
      }
      const bool drop = family.kind() == Family::Kind::Poisson
                            ? all_zero
                            : (all_zero || all_one);
      if (drop) out.push_back({k, l, f.labels()[l], members.size()});
    }
  }
  return out;
}

std::pair<ModelData, std::vector<std::size_t>> drop_noncontributing(
    const ModelData& data, const Family& family) {
  std::vector<std::size_t> kept(data.n());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  ModelData current = data;
  for (;;) {
    const auto groups = find_noncontributing(current, family);
    if (groups.empty()) break;
    std::vector<char> remove(current.n(), 0);
    for (const auto& g : groups) {
      for (auto i : current.factors[g.factor].members_of(g.level)) {
        remove[i] = 1;
      }
    }
    std::vector<std::size_t> rows;
    std::vector<std::size_t> next_kept;
    for (std::size_t i = 0; i < remove.size(); ++i) {
      if (!remove[i]) {
        rows.push_back(i);
        next_kept.push_back(kept[i]);
      }
    }
    if (rows.empty()) {
      throw InvalidInput(
          "no observations remain after dropping non-contributing groups");
    }
    current = current.subset(rows);
    kept = std::move(next_kept);
  }
  return {std::move(current), std::move(kept)};
}

}  // namespace hdfe
