#pragma once

// Monte Carlo protocol: random centers and perturbed samples on St(p, k),
// their images on Gr(p, k), error measures, and the quantile-summarized
// experiment over a sweep of sample sizes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "rlmean/barycenter.hpp"
#include "rlmean/errors.hpp"
#include "rlmean/grassmann.hpp"
#include "rlmean/linalg.hpp"
#include "rlmean/stiefel.hpp"

namespace rlmean {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream used by one (n, trial) cell. It does not
/// depend on the manifold, so Stiefel and Grassmann runs with the same seed
/// see the same underlying Stiefel data.
inline std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t n,
                               std::uint64_t trial) {
  return mix64(mix64(mix64(seed) ^ n) ^ trial);
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  // Fill row by row so the draw order does not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      z(i, j) = normal(rng);
  return z;
}

/// First k columns of a Haar-distributed p x p orthogonal matrix.
inline StiefelPoint sample_center_stiefel(Eigen::Index p, Eigen::Index k,
                                          Rng &rng) {
  if (k < 1 || k > p)
    throw InvalidArgument("sample_center_stiefel: expected 1 <= k <= p");
  const Matrix q = qr_positive(gaussian_matrix(p, p, rng)).q;
  return StiefelPoint::unchecked(q.leftCols(k));
}

/// expm(sigma * Omega) G with Omega the skew part of a standard Gaussian
/// p x p matrix.
inline StiefelPoint sample_perturbed(const StiefelPoint &g, double sigma,
                                     Rng &rng) {
  if (!(sigma > 0.0))
    throw InvalidArgument("sample_perturbed: sigma must be positive");
  const Matrix omega = skew(gaussian_matrix(g.p(), g.p(), rng));
  return StiefelPoint::unchecked(expm_skew(sigma * omega) * g.matrix());
}

struct StiefelDataset {
  StiefelPoint center;
  std::vector<StiefelPoint> samples;
};

struct GrassmannDataset {
  GrassmannPoint center;
  std::vector<GrassmannPoint> samples;
};

inline StiefelDataset generate_stiefel_dataset(Eigen::Index p, Eigen::Index k,
                                               double sigma, std::size_t n,
                                               Rng &rng) {
  StiefelDataset out{sample_center_stiefel(p, k, rng), {}};
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples.push_back(sample_perturbed(out.center, sigma, rng));
  return out;
}

inline GrassmannDataset to_grassmann(const StiefelDataset &data) {
  GrassmannDataset out{stiefel_to_grassmann(data.center), {}};
  out.samples.reserve(data.samples.size());
  for (const auto &s : data.samples)
    out.samples.push_back(stiefel_to_grassmann(s));
  return out;
}

/// ||G^T Ghat - I||_F^2.
inline double err_st(const StiefelPoint &g, const StiefelPoint &ghat) {
  detail::require_same_shape(g, ghat, "err_st");
  return (g.matrix().transpose() * ghat.matrix() -
          Matrix::Identity(g.k(), g.k()))
      .squaredNorm();
}

/// Squared Riemannian distance between subspaces.
inline double err_gr(const GrassmannPoint &g, const GrassmannPoint &ghat) {
  return gr_distance_sq(g, ghat);
}

/// Quantile by linear interpolation between order statistics
/// (h = (n - 1) q).
inline double quantile(std::span<const double> values, double q) {
  if (values.empty())
    throw InvalidArgument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0))
    throw InvalidArgument("quantile: q must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// ---------------------------------------------------------------------------
// Estimators

enum class Manifold { stiefel, grassmann };

inline std::string_view to_string(Manifold m) {
  return m == Manifold::stiefel ? "stiefel" : "grassmann";
}

/// Estimators reported by default, in CSV column order.
inline std::vector<std::string> default_estimators(Manifold m) {
  if (m == Manifold::stiefel)
    return {"R_polar", "R_qr", "proj_polar", "proj_qr"};
  return {"Riem_mean", "proj_evd"};
}

/// Every estimator accepted for the manifold.
inline std::vector<std::string> known_estimators(Manifold m) {
  if (m == Manifold::stiefel)
    return {"R_polar", "R_qr", "R_orthographic", "proj_polar", "proj_qr"};
  return {"Riem_mean", "proj_evd"};
}

inline bool is_known_estimator(Manifold m, std::string_view name) {
  const auto names = known_estimators(m);
  return std::find(names.begin(), names.end(), name) != names.end();
}

/// Runs a Stiefel estimator. Closed-form means report zero iterations and the
/// averaged-lifting residual of their matching lifting.
inline BarycenterResult<StiefelPoint>
estimate_stiefel(std::string_view name, std::span<const StiefelPoint> samples,
                 const SolverControls &controls = {}) {
  if (name == "R_polar")
    return r_barycenter_polar(samples, controls);
  if (name == "R_qr")
    return r_barycenter_qr(samples, controls);
  if (name == "R_orthographic")
    return r_barycenter_orthographic(samples, controls);
  if (name == "proj_polar") {
    StiefelPoint g = proj_mean_polar(samples);
    const double res = rl_residual(g, samples, [](const auto &a, const auto &b) {
      return lift_orthographic(a, b);
    });
    return {std::move(g), 0, res, true};
  }
  if (name == "proj_qr") {
    StiefelPoint g = proj_mean_qr(samples);
    const double res = rl_residual(g, samples, [](const auto &a, const auto &b) {
      return lift_qr_differential(a, b);
    });
    return {std::move(g), 0, res, true};
  }
  throw InvalidArgument("unknown Stiefel estimator '" + std::string(name) + "'");
}

inline BarycenterResult<GrassmannPoint>
estimate_grassmann(std::string_view name,
                   std::span<const GrassmannPoint> samples,
                   const SolverControls &controls = {}) {
  if (name == "Riem_mean")
    return riemannian_mean_grassmann(samples, controls);
  if (name == "proj_evd") {
    GrassmannPoint g = proj_mean_grassmann(samples);
    const double res = rl_residual(g, samples, [](const auto &a, const auto &b) {
      return lift_grassmann(a, b);
    });
    return {std::move(g), 0, res, true};
  }
  throw InvalidArgument("unknown Grassmann estimator '" + std::string(name) +
                        "'");
}

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentConfig {
  Manifold manifold = Manifold::stiefel;
  int p = 10;
  int k = 5;
  double sigma = 0.3;
  std::vector<int> n_values{20, 50, 70, 100, 200, 500};
  int n_trials = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators; // empty means default_estimators
  SolverControls controls;
  int jobs = 1;

  void validate() const {
    if (p < 1 || k < 1 || k > p)
      throw InvalidArgument("config: expected 1 <= k <= p");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw InvalidArgument("config: sigma must be positive");
    if (n_values.empty())
      throw InvalidArgument("config: n_values is empty");
    for (int n : n_values)
      if (n < 1)
        throw InvalidArgument("config: every n must be >= 1");
    if (n_trials < 1)
      throw InvalidArgument("config: n_trials must be >= 1");
    if (jobs < 1)
      throw InvalidArgument("config: jobs must be >= 1");
    for (const auto &e : estimators)
      if (!is_known_estimator(manifold, e))
        throw InvalidArgument("config: unknown estimator '" + e + "' for " +
                              std::string(to_string(manifold)));
    if (!(controls.tol > 0.0) || controls.max_iter < 1)
      throw InvalidArgument("config: invalid solver controls");
  }

  std::vector<std::string> resolved_estimators() const {
    return estimators.empty() ? default_estimators(manifold) : estimators;
  }
};

struct CellSummary {
  double median = std::numeric_limits<double>::quiet_NaN();
  double q10 = std::numeric_limits<double>::quiet_NaN();
  double q90 = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
};

struct ResultTable {
  std::vector<int> n_values;
  std::vector<std::string> estimators;
  /// summary[row][estimator]
  std::vector<std::vector<CellSummary>> summary;
  /// errors[row][estimator][trial]; NaN marks a failed estimator run.
  std::vector<std::vector<std::vector<double>>> errors;

  bool has_failures() const {
    for (const auto &row : summary)
      for (const auto &cell : row)
        if (cell.failures > 0)
          return true;
    return false;
  }
};

namespace detail {

inline double finite_or_nan(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
}

// Error of every estimator on the dataset of one (n, trial) cell.
inline std::vector<double> run_cell(const ExperimentConfig &config,
                                    const std::vector<std::string> &estimators,
                                    int n, int trial) {
  Rng rng(cell_seed(config.seed, static_cast<std::uint64_t>(n),
                    static_cast<std::uint64_t>(trial)));
  const StiefelDataset data = generate_stiefel_dataset(
      config.p, config.k, config.sigma, static_cast<std::size_t>(n), rng);

  std::vector<double> out(estimators.size(),
                          std::numeric_limits<double>::quiet_NaN());
  if (config.manifold == Manifold::stiefel) {
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      try {
        const auto res =
            estimate_stiefel(estimators[e], data.samples, config.controls);
        if (res.point.matrix().allFinite())
          out[e] = finite_or_nan(err_st(data.center, res.point));
      } catch (const Error &) {
        // recorded as a failure
      }
    }
  } else {
    const GrassmannDataset gdata = to_grassmann(data);
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      try {
        const auto res =
            estimate_grassmann(estimators[e], gdata.samples, config.controls);
        if (res.point.matrix().allFinite())
          out[e] = finite_or_nan(err_gr(gdata.center, res.point));
      } catch (const Error &) {
      }
    }
  }
  return out;
}

} // namespace detail

/// Runs every (n, trial) cell, possibly on several threads, and summarizes
/// each (n, estimator) pair by its median and 10%/90% quantiles. The result
/// only depends on the configuration, never on the thread count or order of
/// execution.
inline ResultTable run_experiment(const ExperimentConfig &config) {
  config.validate();
  const auto estimators = config.resolved_estimators();
  const std::size_t rows = config.n_values.size();
  const auto trials = static_cast<std::size_t>(config.n_trials);

  ResultTable table;
  table.n_values = config.n_values;
  table.estimators = estimators;
  table.errors.assign(
      rows, std::vector<std::vector<double>>(estimators.size(),
                                             std::vector<double>(trials)));

  const std::size_t tasks = rows * trials;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) {
      const std::size_t row = t / trials;
      const std::size_t trial = t % trials;
      const auto errs = detail::run_cell(config, estimators,
                                         config.n_values[row],
                                         static_cast<int>(trial));
      for (std::size_t e = 0; e < estimators.size(); ++e)
        table.errors[row][e][trial] = errs[e];
    }
  };

  const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs),
                                          tasks);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j)
      pool.emplace_back(worker);
  }

  table.summary.assign(rows, std::vector<CellSummary>(estimators.size()));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      std::vector<double> ok;
      CellSummary cell;
      for (double v : table.errors[r][e]) {
        if (std::isnan(v))
          ++cell.failures;
        else
          ok.push_back(v);
      }
      if (!ok.empty()) {
        cell.median = quantile(ok, 0.5);
        cell.q10 = quantile(ok, 0.1);
        cell.q90 = quantile(ok, 0.9);
      }
      table.summary[r][e] = cell;
    }
  }
  return table;
}

} // namespace rlmean
