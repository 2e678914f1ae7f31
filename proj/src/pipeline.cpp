#include "hdfe/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>

#include "hdfe/dummy_oracle.hpp"
#include "hdfe/error.hpp"

namespace hdfe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidInput("'" + text + "' is not a number");
  }
  if (used != s.size()) throw InvalidInput("'" + text + "' is not a number");
  return v;
}

std::vector<std::string> string_list(const Json& j) {
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

// Rows of `table` kept after removing `dropped` (sorted ascending).
std::vector<std::size_t> kept_rows(std::size_t n,
                                   const std::vector<std::size_t>& dropped) {
  std::vector<std::size_t> rows;
  rows.reserve(n);
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d < dropped.size() && dropped[d] == i) {
      ++d;
      continue;
    }
    rows.push_back(i);
  }
  return rows;
}

Vcov vcov_for_dummy(const ModelData& data, const Family& family,
                    const DummyFit& dummy, VcovKind kind,
                    const FactorIndex* cluster) {
  const auto p = static_cast<Eigen::Index>(data.p());
  if (kind == VcovKind::Hessian) return {dummy.beta_vcov, kind, {}};
  const FullDesign design = build_design(data);
  const Eigen::VectorXd resid = data.y - family.inverse_link(dummy.eta);
  const Eigen::MatrixXd G = resid.asDiagonal() * design.Z;
  Eigen::MatrixXd full;
  if (kind == VcovKind::Opg) {
    const Eigen::MatrixXd gg = G.transpose() * G;
    full = gg.ldlt().solve(Eigen::MatrixXd::Identity(gg.rows(), gg.cols()));
  } else {
    Eigen::MatrixXd meat;
    if (kind == VcovKind::Robust) {
      meat = G.transpose() * G;
    } else {
      Eigen::MatrixXd sums =
          Eigen::MatrixXd::Zero(cluster->level_count(), G.cols());
      const auto levels = cluster->levels();
      for (Eigen::Index i = 0; i < G.rows(); ++i) {
        sums.row(levels[i]) += G.row(i);
      }
      meat = sums.transpose() * sums;
    }
    full = dummy.vcov * meat * dummy.vcov;
  }
  Eigen::MatrixXd block = full.bottomRightCorner(p, p);
  return {(0.5 * (block + block.transpose())).eval(), kind, {}};
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) out.push_back(parse_number(s));
  return out;
}

ModelData load_model_data(const CsvTable& table, const std::string& response,
                          const std::vector<std::string>& regressors,
                          const std::vector<std::string>& fixed_effects) {
  ModelData data;
  data.response_name = response;
  data.y = table.numeric(response);
  data.X.resize(data.y.size(), static_cast<Eigen::Index>(regressors.size()));
  for (std::size_t j = 0; j < regressors.size(); ++j) {
    data.X.col(static_cast<Eigen::Index>(j)) = table.numeric(regressors[j]);
  }
  data.column_names = regressors;
  for (const auto& f : fixed_effects) {
    data.factors.push_back(FactorIndex::build(table.column(f), f));
  }
  data.validate();
  return data;
}

Json estimate(const CsvTable& table, const EstimateOptions& options,
              std::vector<std::string>* notes) {
  const auto start = std::chrono::steady_clock::now();
  ModelData data = load_model_data(table, options.response,
                                   options.regressors, options.fixed_effects);
  const std::size_t n_input = data.n();
  const Family& family = options.family;
  family.check_response(data.y);

  std::vector<std::size_t> dropped;
  std::vector<std::size_t> kept;
  const auto groups = find_noncontributing(data, family);
  if (!groups.empty() && notes) {
    for (const auto& g : groups) {
      notes->push_back("non-contributing group: " +
                       data.factors[g.factor].name() + "=" + g.label + " (" +
                       std::to_string(g.observations) + " observations)");
    }
  }
  if (options.drop_noncontributing && !groups.empty()) {
    auto reduced = drop_noncontributing(data, family);
    data = std::move(reduced.first);
    kept = std::move(reduced.second);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n_input; ++i) {
      if (k < kept.size() && kept[k] == i) {
        ++k;
      } else {
        dropped.push_back(i);
      }
    }
  }

  VcovKind kind = VcovKind::Hessian;
  std::string cluster_column;
  if (options.vcov == "hessian") {
    kind = VcovKind::Hessian;
  } else if (options.vcov == "opg") {
    kind = VcovKind::Opg;
  } else if (options.vcov == "robust") {
    kind = VcovKind::Robust;
  } else if (options.vcov.rfind("cluster:", 0) == 0) {
    kind = VcovKind::Cluster;
    cluster_column = options.vcov.substr(8);
  } else {
    throw InvalidInput("unknown vcov '" + options.vcov + "'");
  }
  std::optional<FactorIndex> cluster;
  if (kind == VcovKind::Cluster) {
    auto full = FactorIndex::build(table.column(cluster_column),
                                   cluster_column);
    cluster = kept.empty() ? std::move(full) : full.subset(kept);
  }

  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  Vcov V;
  int iterations = 0;
  double loglik = 0.0;
  double change = 0.0;
  bool converged = true;
  if (options.engine == Engine::Ap) {
    const FitResult f = fit(data, family, options.ap, options.newton);
    const Eigen::MatrixXd G = score_matrix(f.X_dd, f.nu_dd);
    switch (kind) {
      case VcovKind::Hessian: V = vcov_hessian(f.X_dd); break;
      case VcovKind::Opg: V = vcov_opg(G); break;
      case VcovKind::Robust: V = vcov_robust(f.X_dd, G); break;
      case VcovKind::Cluster: V = vcov_cluster(f.X_dd, G, *cluster); break;
    }
    beta = f.beta;
    eta = f.eta;
    iterations = f.iterations;
    loglik = f.loglik;
    change = f.final_deviance_change;
    converged = f.converged;
  } else {
    const DummyFit d = fit_dummy(data, family, options.newton);
    V = vcov_for_dummy(data, family, d, kind,
                       cluster ? &*cluster : nullptr);
    beta = d.beta;
    eta = d.eta;
    iterations = d.iterations;
    loglik = d.loglik;
  }
  if (!V.warning.empty() && notes) notes->push_back(V.warning);
  const Eigen::VectorXd se = standard_errors(V);

  Json out;
  out["engine"] = options.engine == Engine::Ap ? "ap" : "dummy";
  out["family"] = family.name();
  out["response"] = options.response;
  out["regressors"] = options.regressors;
  out["fixed_effects"] = options.fixed_effects;
  Json coef = Json::object();
  Json ses = Json::object();
  for (std::size_t j = 0; j < options.regressors.size(); ++j) {
    coef[options.regressors[j]] = beta[static_cast<Eigen::Index>(j)];
    ses[options.regressors[j]] = se[static_cast<Eigen::Index>(j)];
  }
  out["coefficients"] = coef;
  out["standard_errors"] = ses;
  out["vcov_label"] =
      kind == VcovKind::Cluster ? "cluster:" + cluster_column : vcov_label(kind);
  out["vcov"] = matrix_json(V.matrix);
  if (!V.warning.empty()) out["vcov_warning"] = V.warning;
  out["iterations"] = iterations;
  out["converged"] = converged;
  out["log_likelihood"] = loglik;
  out["deviance_change"] = change;
  out["n"] = data.n();
  out["n_input"] = n_input;
  Json levels = Json::object();
  for (const auto& f : data.factors) levels[f.name()] = f.level_count();
  out["levels"] = levels;
  out["ap"] = {{"tolerance", options.ap.tolerance},
               {"schedule", schedule_name(options.ap.schedule)}};
  out["dropped_rows"] = dropped;
  out["linear_predictor"] = std::vector<double>(eta.data(),
                                                eta.data() + eta.size());
  out["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

Json coefficient_payload(const Json& result) {
  Json out;
  for (const char* key : {"coefficients", "standard_errors", "vcov",
                          "log_likelihood", "iterations", "linear_predictor"}) {
    if (result.contains(key)) out[key] = result[key];
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> parse_restrictions(
    const std::string& text, const std::vector<std::string>& names) {
  const auto parts = split_list(text);
  if (parts.empty()) throw InvalidInput("no restrictions given");
  const auto q = static_cast<Eigen::Index>(parts.size());
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(q, names.size());
  Eigen::VectorXd r = Eigen::VectorXd::Zero(q);
  for (Eigen::Index row = 0; row < q; ++row) {
    const auto& part = parts[row];
    const auto eq = part.find('=');
    if (eq == std::string::npos || part.find('=', eq + 1) != std::string::npos) {
      throw InvalidInput("restriction '" + part + "' needs exactly one '='");
    }
    const std::string lhs = trim(part.substr(0, eq));
    r[row] = parse_number(part.substr(eq + 1));
    // Terms: [+|-] [number *] name
    std::size_t pos = 0;
    bool any = false;
    while (pos < lhs.size()) {
      double sign = 1.0;
      while (pos < lhs.size() && (lhs[pos] == '+' || lhs[pos] == '-' ||
                                  lhs[pos] == ' ')) {
        if (lhs[pos] == '-') sign = -sign;
        ++pos;
      }
      const auto end = lhs.find_first_of("+-", pos);
      std::string term = trim(lhs.substr(pos, end == std::string::npos
                                                  ? std::string::npos
                                                  : end - pos));
      pos = end == std::string::npos ? lhs.size() : end;
      if (term.empty()) throw InvalidInput("malformed restriction '" + part + "'");
      double coef = 1.0;
      const auto star = term.find('*');
      if (star != std::string::npos) {
        coef = parse_number(term.substr(0, star));
        term = trim(term.substr(star + 1));
      }
      const auto it = std::find(names.begin(), names.end(), term);
      if (it == names.end()) {
        throw InvalidInput("restriction refers to unknown coefficient '" +
                           term + "'");
      }
      R(row, it - names.begin()) += sign * coef;
      any = true;
    }
    if (!any) throw InvalidInput("restriction '" + part + "' has no terms");
  }
  return {R, r};
}

Json wald_from_result(const Json& result, const std::string& restrictions) {
  const auto names = string_list(result.at("regressors"));
  Eigen::VectorXd beta(static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    beta[static_cast<Eigen::Index>(j)] =
        result.at("coefficients").at(names[j]).get<double>();
  }
  Vcov V;
  V.matrix = matrix_from_json(result.at("vcov"));
  const auto [R, r] = parse_restrictions(restrictions, names);
  const auto w = wald_test(beta, V, R, r);
  Json out;
  out["restrictions"] = restrictions;
  out["vcov_label"] = result.value("vcov_label", "");
  out["statistic"] = w.statistic;
  out["df"] = w.df;
  out["p_value"] = w.p_value;
  return out;
}

FeRecoveryOutput recover_from_result(const Json& result, const CsvTable& table,
                                     FeSolver solver,
                                     const FeSolverConfig& cfg) {
  const auto regressors = string_list(result.at("regressors"));
  const auto fes = string_list(result.at("fixed_effects"));
  ModelData data = load_model_data(table, result.at("response"), regressors,
                                   fes);
  const auto dropped =
      result.value("dropped_rows", std::vector<std::size_t>{});
  if (!dropped.empty()) {
    const auto rows = kept_rows(data.n(), dropped);
    data = data.subset(rows);
  }
  const auto eta_vec = result.at("linear_predictor").get<std::vector<double>>();
  if (eta_vec.size() != data.n()) {
    throw InvalidInput("result has " + std::to_string(eta_vec.size()) +
                       " fitted values but the data has " +
                       std::to_string(data.n()) + " rows");
  }
  const Eigen::VectorXd eta =
      Eigen::Map<const Eigen::VectorXd>(eta_vec.data(), eta_vec.size());
  Eigen::VectorXd beta(static_cast<Eigen::Index>(regressors.size()));
  for (std::size_t j = 0; j < regressors.size(); ++j) {
    beta[static_cast<Eigen::Index>(j)] =
        result.at("coefficients").at(regressors[j]).get<double>();
  }
  const Eigen::VectorXd b = target_vector(eta, data.X, beta);
  FeRecoveryOutput out;
  out.effects =
      normalize_fe(recover_fixed_effects(b, data.factors, solver, cfg));
  out.table.header = {"category", "level_label", "estimate"};
  out.table.columns.resize(3);
  for (std::size_t k = 0; k < data.factors.size(); ++k) {
    const auto& f = data.factors[k];
    for (std::size_t l = 0; l < f.level_count(); ++l) {
      out.table.columns[0].push_back(f.name());
      out.table.columns[1].push_back(f.labels()[l]);
      out.table.columns[2].push_back(
          format_double(out.effects.alpha[k][static_cast<Eigen::Index>(l)]));
    }
  }
  out.factors = std::move(data.factors);
  return out;
}

CsvTable model_data_table(const ModelData& data) {
  CsvTable t;
  t.header.push_back(data.response_name);
  for (const auto& c : data.column_names) t.header.push_back(c);
  for (const auto& f : data.factors) t.header.push_back(f.name());
  t.columns.resize(t.header.size());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    std::size_t c = 0;
    t.columns[c++].push_back(format_double(data.y[r]));
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      t.columns[c++].push_back(format_double(data.X(r, j)));
    }
    for (const auto& f : data.factors) {
      t.columns[c++].push_back(f.labels()[f.level_of(i)]);
    }
  }
  return t;
}

Json exactness_to_json(const ExactnessReport& report) {
  Json out;
  out["design"] = design_name(report.config.design);
  out["N"] = report.config.N;
  out["T"] = report.config.T;
  out["seed"] = report.config.seed;
  out["replications"] = report.config.replications;
  out["failed"] = report.failed;
  out["tolerances"] = report.tolerances;
  Json beta = Json::object();
  Json se = Json::object();
  for (std::size_t d = 0; d < report.digits.size(); ++d) {
    const auto key = std::to_string(report.digits[d]) + " digits";
    beta[key] = report.beta_agreement[d];
    se[key] = report.se_agreement[d];
  }
  out["exactness_beta1"] = beta;
  out["exactness_se_beta1"] = se;
  out["mean_seconds"] = {{"dummy", report.mean_dummy_seconds},
                         {"ap", report.mean_ap_seconds}};
  Json errors = Json::array();
  for (const auto& r : report.replications) {
    if (r.failed) errors.push_back({{"seed", r.seed}, {"error", r.error}});
  }
  out["errors"] = errors;
  return out;
}

Json bench_to_json(const BenchReport& report) {
  Json out;
  out["design"] = design_name(report.config.design);
  out["N"] = report.config.N;
  out["T"] = report.config.T;
  out["replications"] = report.config.replications;
  out["failed"] = report.failed;
  out["tolerances"] = report.tolerances;
  out["mean_seconds"] = {
      {"dummy", report.mean_dummy_seconds ? Json(*report.mean_dummy_seconds)
                                          : Json(nullptr)},
      {"ap", report.mean_ap_seconds}};
  out["mean_newton_iterations"] = report.mean_ap_iterations;
  return out;
}

}  // namespace hdfe
