// Command-line front end: Monte Carlo experiments written as CSV, and single
// barycenter computations on matrix-list files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlmean/rlmean.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ExperimentArgs {
  std::string manifold = "stiefel";
  int p = 10;
  int k = 5;
  double sigma = 0.3;
  std::vector<int> n_values{20, 50, 70, 100, 200, 500};
  int trials = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators;
  std::string out;
  bool db = false;
  int jobs = 1;
  double tol = 1e-10;
  int max_iter = 200;
};

struct MeanArgs {
  std::string manifold = "stiefel";
  std::string estimator;
  std::string in;
  std::string out;
  double tol = 1e-10;
  int max_iter = 200;
  bool strict = false;
};

rlmean::Manifold parse_manifold(const std::string &name) {
  if (name == "stiefel")
    return rlmean::Manifold::stiefel;
  if (name == "grassmann")
    return rlmean::Manifold::grassmann;
  throw rlmean::InvalidArgument("unknown manifold '" + name + "'");
}

// Writes the whole payload or removes the file.
void write_file(const std::string &path, const std::string &payload) {
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (f && (f << payload) && f.flush())
      return;
  }
  std::error_code ec;
  std::filesystem::remove(path, ec);
  throw std::runtime_error("cannot write '" + path + "'");
}

int run_experiment_cmd(const ExperimentArgs &args) {
  rlmean::ExperimentConfig config;
  try {
    config.manifold = parse_manifold(args.manifold);
    config.p = args.p;
    config.k = args.k;
    config.sigma = args.sigma;
    config.n_values = args.n_values;
    config.n_trials = args.trials;
    config.seed = args.seed;
    config.estimators = args.estimators;
    config.jobs = args.jobs;
    config.controls.tol = args.tol;
    config.controls.max_iter = args.max_iter;
    config.validate();
  } catch (const rlmean::InvalidArgument &e) {
    std::cerr << "rlmean experiment: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const auto table = rlmean::run_experiment(config);
    write_file(args.out, rlmean::csv_string(table, args.db));
  } catch (const std::exception &e) {
    std::cerr << "rlmean experiment: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

std::string footer(bool converged, int iterations, double residual) {
  return std::string("# converged=") + (converged ? "true" : "false") +
         " iterations=" + std::to_string(iterations) +
         " residual=" + rlmean::format_number(residual) + '\n';
}

int run_mean_cmd(const MeanArgs &args) {
  rlmean::Manifold manifold;
  rlmean::MatrixList list;
  rlmean::SolverControls controls;
  std::string estimator = args.estimator;
  try {
    manifold = parse_manifold(args.manifold);
    if (estimator.empty())
      estimator = manifold == rlmean::Manifold::stiefel ? "proj_polar"
                                                        : "proj_evd";
    if (!rlmean::is_known_estimator(manifold, estimator))
      throw rlmean::InvalidArgument("unknown estimator '" + estimator +
                                    "' for " + args.manifold);
    controls.tol = args.tol;
    controls.max_iter = args.max_iter;
    controls.validate(1);

    std::ifstream in(args.in);
    if (!in)
      throw rlmean::InvalidArgument("cannot open '" + args.in + "'");
    list = rlmean::read_matrix_list(in,
                                    manifold == rlmean::Manifold::grassmann);
  } catch (const rlmean::InvalidArgument &e) {
    std::cerr << "rlmean mean: " << e.what() << '\n';
    return kExitUsage;
  }

  const bool iterative = estimator.rfind("R", 0) == 0;
  std::ostringstream out;
  bool converged = true;
  try {
    if (manifold == rlmean::Manifold::stiefel) {
      std::vector<rlmean::StiefelPoint> samples;
      for (std::size_t b = 0; b < list.blocks.size(); ++b) {
        try {
          samples.emplace_back(list.blocks[b]);
        } catch (const rlmean::InvalidArgument &e) {
          std::cerr << "rlmean mean: block " << b << ": " << e.what() << '\n';
          return kExitUsage;
        }
      }
      const auto res = rlmean::estimate_stiefel(estimator, samples, controls);
      converged = res.converged;
      rlmean::write_matrix_block(out, res.point.matrix(), list.p, list.k);
      out << footer(res.converged, res.iterations, res.final_step_norm);
    } else {
      std::vector<rlmean::GrassmannPoint> samples;
      for (std::size_t b = 0; b < list.blocks.size(); ++b) {
        try {
          samples.emplace_back(list.blocks[b]);
          if (samples.back().k() != list.k)
            throw rlmean::InvalidArgument(
                "projector rank " + std::to_string(samples.back().k()) +
                " does not match header k = " + std::to_string(list.k));
        } catch (const rlmean::InvalidArgument &e) {
          std::cerr << "rlmean mean: block " << b << ": " << e.what() << '\n';
          return kExitUsage;
        }
      }
      const auto res = rlmean::estimate_grassmann(estimator, samples, controls);
      converged = res.converged;
      rlmean::write_matrix_block(out, res.point.matrix(), list.p, list.k);
      out << footer(res.converged, res.iterations, res.final_step_norm);
    }
  } catch (const rlmean::Error &e) {
    std::cerr << "rlmean mean: " << e.what() << '\n';
    return kExitRuntime;
  }

  if (iterative && !converged && args.strict) {
    std::cerr << "rlmean mean: " << estimator << " did not converge\n";
    return kExitRuntime;
  }
  try {
    write_file(args.out, out.str());
  } catch (const std::exception &e) {
    std::cerr << "rlmean mean: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Averaging on Stiefel and Grassmann manifolds"};
  app.require_subcommand(1);

  ExperimentArgs ex;
  auto *experiment =
      app.add_subcommand("experiment", "Run a Monte Carlo error sweep");
  experiment->add_option("--manifold", ex.manifold, "stiefel or grassmann")
      ->check(CLI::IsMember({"stiefel", "grassmann"}));
  experiment->add_option("--p", ex.p, "Ambient dimension");
  experiment->add_option("--k", ex.k, "Subspace dimension");
  experiment->add_option("--sigma", ex.sigma, "Noise level");
  experiment->add_option("--n-values", ex.n_values, "Comma-separated sample sizes")
      ->delimiter(',');
  experiment->add_option("--trials", ex.trials, "Realizations per sample size");
  experiment->add_option("--seed", ex.seed, "Master RNG seed");
  experiment
      ->add_option("--estimators", ex.estimators,
                   "Comma-separated estimators (default: all for the manifold)")
      ->delimiter(',');
  experiment->add_option("--out", ex.out, "Output CSV path")->required();
  experiment->add_flag("--db", ex.db, "Write 20*log10 of each statistic");
  experiment->add_option("--jobs", ex.jobs, "Worker threads");
  experiment->add_option("--tol", ex.tol, "Fixed-point tolerance");
  experiment->add_option("--max-iter", ex.max_iter, "Fixed-point iteration cap");

  MeanArgs mn;
  auto *mean = app.add_subcommand("mean", "Average the matrices of one file");
  mean->add_option("--manifold", mn.manifold, "stiefel or grassmann")
      ->check(CLI::IsMember({"stiefel", "grassmann"}));
  mean->add_option("--estimator", mn.estimator,
                   "R_polar, R_qr, R_orthographic, proj_polar, proj_qr, "
                   "Riem_mean or proj_evd");
  mean->add_option("--in", mn.in, "Input matrix list")->required();
  mean->add_option("--out", mn.out, "Output matrix file")->required();
  mean->add_option("--tol", mn.tol, "Fixed-point tolerance");
  mean->add_option("--max-iter", mn.max_iter, "Fixed-point iteration cap");
  mean->add_flag("--strict", mn.strict,
                 "Fail when an iterative estimator does not converge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "rlmean: " << e.what() << '\n';
    return kExitUsage;
  }

  if (*experiment)
    return run_experiment_cmd(ex);
  return run_mean_cmd(mn);
}
