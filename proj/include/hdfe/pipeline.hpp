#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "hdfe/csv.hpp"
#include "hdfe/estimator.hpp"
#include "hdfe/factor_index.hpp"
#include "hdfe/family.hpp"
#include "hdfe/fe_recovery.hpp"
#include "hdfe/inference.hpp"
#include "hdfe/projections.hpp"
#include "hdfe/simulation.hpp"

// Glue between the library and its file formats: CSV model data in, result
// JSON out, and the follow-up commands that consume a result JSON.
namespace hdfe {

using Json = nlohmann::ordered_json;

enum class Engine { Ap, Dummy };

struct EstimateOptions {
  std::string response;
  std::vector<std::string> regressors;
  std::vector<std::string> fixed_effects;
  Family family = Family::logit();
  Engine engine = Engine::Ap;
  ApConfig ap;
  NewtonConfig newton;
  // hessian | opg | robust | cluster:<column>
  std::string vcov = "hessian";
  bool drop_noncontributing = false;
};

ModelData load_model_data(const CsvTable& table, const std::string& response,
                          const std::vector<std::string>& regressors,
                          const std::vector<std::string>& fixed_effects);

// Fits the model and returns the result document. `notes` collects
// diagnostics (non-contributing groups, vcov warnings) for the caller.
Json estimate(const CsvTable& table, const EstimateOptions& options,
              std::vector<std::string>* notes = nullptr);

// The deterministic part of a result document (no timings).
Json coefficient_payload(const Json& result);

// Parses "x1=0,x2-x3=0,2*x1+x4=1" against the coefficient names.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> parse_restrictions(
    const std::string& text, const std::vector<std::string>& names);

Json wald_from_result(const Json& result, const std::string& restrictions);

struct FeRecoveryOutput {
  FixedEffects effects;
  std::vector<FactorIndex> factors;
  CsvTable table;  // category, level_label, estimate
};

FeRecoveryOutput recover_from_result(const Json& result, const CsvTable& data,
                                     FeSolver solver,
                                     const FeSolverConfig& cfg = {});

CsvTable model_data_table(const ModelData& data);

Json exactness_to_json(const ExactnessReport& report);
Json bench_to_json(const BenchReport& report);

std::vector<double> parse_number_list(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

}  // namespace hdfe
