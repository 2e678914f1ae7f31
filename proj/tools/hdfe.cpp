#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "hdfe/error.hpp"
#include "hdfe/pipeline.hpp"

namespace {

void write_json(const std::string& path, const hdfe::Json& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw hdfe::IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

hdfe::Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hdfe::IoError("cannot open '" + path + "' for reading");
  return hdfe::Json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-effects GLM estimation by pseudo-demeaning"};
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "Fit a logit/poisson model");
  std::string data_path, response = "y", regressors, fe, family = "logit";
  std::string schedule = "nh", vcov = "hessian", out_path = "-";
  std::string engine = "ap";
  double ap_tol = 1e-5, dev_tol = 1e-8;
  int max_iter = 100, threads = 1;
  bool drop = false;
  est->add_option("--data", data_path, "Input CSV with header")->required();
  est->add_option("--response", response, "Response column");
  est->add_option("--regressors", regressors, "Comma-separated regressors");
  est->add_option("--fe", fe, "Comma-separated fixed-effect columns")
      ->required();
  est->add_option("--family", family, "logit or poisson")
      ->check(CLI::IsMember({"logit", "poisson"}));
  est->add_option("--ap-tol", ap_tol, "Alternating-projection tolerance");
  est->add_option("--ap-schedule", schedule, "nh or cimmino")
      ->check(CLI::IsMember({"nh", "cimmino"}));
  est->add_option("--vcov", vcov, "hessian|opg|robust|cluster:<col>");
  est->add_option("--engine", engine, "ap or dummy")
      ->check(CLI::IsMember({"ap", "dummy"}));
  est->add_option("--dev-tol", dev_tol, "Newton convergence tolerance");
  est->add_option("--max-iter", max_iter, "Newton iteration cap");
  est->add_option("--threads", threads, "Threads for column demeaning");
  est->add_flag("--drop-noncontributing", drop,
                "Drop groups that cannot contribute to the likelihood");
  est->add_option("--out", out_path, "Result JSON path ('-' for stdout)");

  // wald
  auto* wald = app.add_subcommand("wald", "Wald test from a result JSON");
  std::string result_path, restrict_text, wald_out = "-";
  wald->add_option("--result", result_path, "Result JSON")->required();
  wald->add_option("--restrict", restrict_text, "e.g. \"x1=0,x2=0\"")
      ->required();
  wald->add_option("--out", wald_out, "Output JSON path ('-' for stdout)");

  // recover-fe
  auto* rec = app.add_subcommand("recover-fe", "Recover fixed effects");
  std::string rec_result, rec_data, solver = "gs", rec_out = "-";
  double fe_tol = 1e-8;
  int fe_sweeps = 100000;
  rec->add_option("--result", rec_result, "Result JSON")->required();
  rec->add_option("--data", rec_data, "Data CSV used for the fit")->required();
  rec->add_option("--solver", solver, "gs or kaczmarz")
      ->check(CLI::IsMember({"gs", "kaczmarz"}));
  rec->add_option("--tol", fe_tol, "Solver tolerance");
  rec->add_option("--max-sweeps", fe_sweeps, "Solver sweep cap");
  rec->add_option("--out", rec_out, "Output CSV path ('-' for stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate simulated panels");
  std::string design = "logit2", sim_out = "-";
  std::size_t sim_n = 50, sim_t = 10, extra = 0;
  std::uint64_t seed = 7;
  sim->add_option("--design", design, "logit2 or ppml3")
      ->check(CLI::IsMember({"logit2", "ppml3"}));
  sim->add_option("--n", sim_n, "N");
  sim->add_option("--t", sim_t, "T");
  sim->add_option("--seed", seed, "Seed");
  sim->add_option("--extra-regressors", extra,
                  "Additional standard-normal regressors");
  sim->add_option("--out", sim_out, "Output CSV path ('-' for stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Exactness and timing protocol");
  std::string bench_design = "logit2", grid = "1e-8,1e-5,1e-3";
  std::string bench_out = "-";
  std::size_t bench_n = 0, bench_t = 0;
  int reps = 10;
  std::uint64_t bench_seed = 1;
  bool timing_only = false;
  bench->add_option("--design", bench_design, "logit2 or ppml3")
      ->check(CLI::IsMember({"logit2", "ppml3"}));
  bench->add_option("--grid", grid, "Comma-separated AP tolerances");
  bench->add_option("--reps", reps, "Replications");
  bench->add_option("--n", bench_n, "N (default 50 logit2, 10 ppml3)");
  bench->add_option("--t", bench_t, "T (default 10 logit2, 5 ppml3)");
  bench->add_option("--seed", bench_seed, "Base seed");
  bench->add_flag("--timing-only", timing_only,
                  "Skip the exactness comparison");
  bench->add_option("--out", bench_out, "Report JSON path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est) {
      hdfe::EstimateOptions opt;
      opt.response = response;
      opt.regressors = hdfe::split_list(regressors);
      opt.fixed_effects = hdfe::split_list(fe);
      opt.family = hdfe::Family::parse(family);
      opt.engine = engine == "ap" ? hdfe::Engine::Ap : hdfe::Engine::Dummy;
      opt.ap.tolerance = ap_tol;
      opt.ap.schedule = hdfe::parse_schedule(schedule);
      opt.ap.threads = threads;
      opt.newton.dev_tol = dev_tol;
      opt.newton.max_iter = max_iter;
      opt.vcov = vcov;
      opt.drop_noncontributing = drop;
      std::vector<std::string> notes;
      const auto table = hdfe::read_csv_file(data_path);
      const auto result = hdfe::estimate(table, opt, &notes);
      for (const auto& n : notes) std::cerr << "note: " << n << '\n';
      write_json(out_path, result);
    } else if (*wald) {
      write_json(wald_out,
                 hdfe::wald_from_result(read_json(result_path), restrict_text));
    } else if (*rec) {
      hdfe::FeSolverConfig cfg{fe_tol, fe_sweeps};
      const auto out = hdfe::recover_from_result(
          read_json(rec_result), hdfe::read_csv_file(rec_data),
          hdfe::parse_fe_solver(solver), cfg);
      std::cerr << "solver " << solver << ": " << out.effects.sweeps
                << " sweeps, residual norm " << out.effects.residual_norm
                << '\n';
      if (rec_out == "-") {
        hdfe::write_csv(std::cout, out.table);
      } else {
        hdfe::write_csv_file(rec_out, out.table);
      }
    } else if (*sim) {
      hdfe::DgpConfig cfg;
      cfg.design = hdfe::parse_design(design);
      cfg.N = sim_n;
      cfg.T = sim_t;
      cfg.seed = seed;
      cfg.extra_regressors = extra;
      const auto table = hdfe::model_data_table(hdfe::simulate(cfg));
      if (sim_out == "-") {
        hdfe::write_csv(std::cout, table);
      } else {
        hdfe::write_csv_file(sim_out, table);
      }
    } else if (*bench) {
      hdfe::DgpConfig cfg;
      cfg.design = hdfe::parse_design(bench_design);
      const bool logit = cfg.design == hdfe::Design::TwoWayLogit;
      cfg.N = bench_n ? bench_n : (logit ? 50 : 10);
      cfg.T = bench_t ? bench_t : (logit ? 10 : 5);
      cfg.seed = bench_seed;
      cfg.replications = reps;
      const auto tolerances = hdfe::parse_number_list(grid);
      hdfe::Json doc;
      if (!timing_only) {
        doc["exactness"] =
            hdfe::exactness_to_json(hdfe::run_exactness(cfg, tolerances));
      }
      doc["timing"] = hdfe::bench_to_json(hdfe::run_bench(cfg, tolerances));
      write_json(bench_out, doc);
    }
  } catch (const hdfe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
