#pragma once

// Barycenters on Stiefel and Grassmann manifolds.
//
// rl_fixed_point is the generic retraction/lifting fixed-point iteration
//
//   G <- R_G( (1/n) sum_i L_G(M_i) ),
//
// whose fixed points are exactly the points where the averaged lifting
// vanishes. Choosing L = R^{-1} gives R-barycenters, L = log and R = exp the
// Riemannian mean. With R the projection of G + xi onto the manifold and L the
// tangent projection of M - G, the fixed point is the projection of the
// arithmetic mean, available in closed form (proj_mean_*).

#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlmean/errors.hpp"
#include "rlmean/grassmann.hpp"
#include "rlmean/linalg.hpp"
#include "rlmean/stiefel.hpp"

namespace rlmean {

struct SolverControls {
  double tol = 1e-10;       // threshold on the norm of the averaged lifting
  int max_iter = 200;
  std::size_t init_index = 0; // sample used as the initial iterate

  void validate(std::size_t n_samples) const {
    if (!(tol > 0.0))
      throw InvalidArgument("SolverControls: tol must be positive");
    if (max_iter < 1)
      throw InvalidArgument("SolverControls: max_iter must be >= 1");
    if (init_index >= n_samples)
      throw InvalidArgument("SolverControls: init_index out of range");
  }
};

template <class Point> struct BarycenterResult {
  Point point;
  int iterations = 0;
  double final_step_norm = 0.0;
  bool converged = false;
};

/// Observer that ignores every iterate.
struct NoObserver {
  template <class Point> void operator()(const Point &, double) const {}
};

namespace detail {

template <class Point> void require_samples(std::span<const Point> samples) {
  if (samples.empty())
    throw InvalidArgument("barycenter: no samples");
}

// Mean of the liftings of every sample at g. Lifting errors are rethrown as
// LiftingFailure with the original exception nested.
template <class Point, class Lifting>
auto mean_lifting(const Point &g, std::span<const Point> samples,
                  Lifting &lift) {
  Matrix sum;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      const auto xi = lift(g, samples[i]);
      if (i == 0)
        sum = xi.vector();
      else
        sum += xi.vector();
    } catch (const Error &e) {
      std::throw_with_nested(LiftingFailure(i, e.what()));
    }
  }
  sum /= static_cast<double>(samples.size());
  using Tangent = decltype(lift(g, samples[0]));
  return Tangent::unchecked(g, std::move(sum));
}

} // namespace detail

/// Generic retraction/lifting fixed-point iteration started at
/// samples[controls.init_index]. Stops once the averaged lifting has norm at
/// most controls.tol. When max_iter is reached (or the iteration produces
/// non-finite values) the iterate with the smallest averaged lifting is
/// returned with converged = false.
///
/// The observer is called once per iterate with the point and the norm of the
/// averaged lifting there.
template <class Point, class Retraction, class Lifting,
          class Observer = NoObserver>
BarycenterResult<Point> rl_fixed_point(std::span<const Point> samples,
                                       Retraction retract, Lifting lift,
                                       const SolverControls &controls = {},
                                       Observer observer = {}) {
  detail::require_samples(samples);
  controls.validate(samples.size());

  Point g = samples[controls.init_index];
  Point best = g;
  double best_norm = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= controls.max_iter; ++it) {
    auto xi = detail::mean_lifting(g, samples, lift);
    const double norm = xi.norm();
    observer(g, norm);
    if (!std::isfinite(norm))
      break;
    if (norm < best_norm) {
      best = g;
      best_norm = norm;
    }
    if (norm <= controls.tol)
      return {std::move(g), it, norm, true};
    g = retract(xi);
  }
  return {std::move(best), controls.max_iter, best_norm, false};
}

/// Norm of the averaged lifting at g: zero exactly at RL-barycenters.
template <class Point, class Lifting>
double rl_residual(const Point &g, std::span<const Point> samples,
                   Lifting lift) {
  detail::require_samples(samples);
  return detail::mean_lifting(g, samples, lift).norm();
}

/// Entrywise arithmetic mean of the sample matrices, summed in index order.
template <class Point> Matrix arithmetic_mean(std::span<const Point> samples) {
  detail::require_samples(samples);
  Matrix sum = samples[0].matrix();
  for (std::size_t i = 1; i < samples.size(); ++i)
    sum += samples[i].matrix();
  return sum / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Stiefel

inline BarycenterResult<StiefelPoint>
r_barycenter_polar(std::span<const StiefelPoint> samples,
                   const SolverControls &controls = {}) {
  return rl_fixed_point(
      samples, [](const StiefelTangent &xi) { return retract_polar(xi); },
      [](const StiefelPoint &g, const StiefelPoint &m) {
        return inv_retract_polar(g, m);
      },
      controls);
}

inline BarycenterResult<StiefelPoint>
r_barycenter_qr(std::span<const StiefelPoint> samples,
                const SolverControls &controls = {}) {
  return rl_fixed_point(
      samples, [](const StiefelTangent &xi) { return retract_qr(xi); },
      [](const StiefelPoint &g, const StiefelPoint &m) {
        return inv_retract_qr(g, m);
      },
      controls);
}

/// R-barycenter of the orthographic retraction (Riccati retraction paired
/// with its closed-form inverse).
inline BarycenterResult<StiefelPoint>
r_barycenter_orthographic(std::span<const StiefelPoint> samples,
                          const SolverControls &controls = {}) {
  return rl_fixed_point(
      samples,
      [](const StiefelTangent &xi) { return retract_orthographic(xi); },
      [](const StiefelPoint &g, const StiefelPoint &m) {
        return lift_orthographic(g, m);
      },
      controls);
}

/// RL iteration with the polar (projection) retraction and the orthographic
/// (tangent projection) lifting. Its fixed point is proj_mean_polar.
inline BarycenterResult<StiefelPoint>
rl_barycenter_projection(std::span<const StiefelPoint> samples,
                         const SolverControls &controls = {}) {
  return rl_fixed_point(
      samples, [](const StiefelTangent &xi) { return retract_polar(xi); },
      [](const StiefelPoint &g, const StiefelPoint &m) {
        return lift_orthographic(g, m);
      },
      controls);
}

/// Polar projection of the arithmetic mean.
inline StiefelPoint proj_mean_polar(std::span<const StiefelPoint> samples) {
  return proj_to_stiefel(arithmetic_mean(samples));
}

/// QR projection of the arithmetic mean.
inline StiefelPoint proj_mean_qr(std::span<const StiefelPoint> samples) {
  return StiefelPoint::unchecked(qr_positive(arithmetic_mean(samples)).q);
}

// ---------------------------------------------------------------------------
// Grassmann

/// Eigenvalue-decomposition projection of the arithmetic mean of projectors.
inline GrassmannPoint
proj_mean_grassmann(std::span<const GrassmannPoint> samples) {
  detail::require_samples(samples);
  return proj_to_grassmann(arithmetic_mean(samples), samples[0].k());
}

/// Horizontal tangent vector at a Stiefel representative.
class HorizontalTangent {
public:
  static HorizontalTangent unchecked(StiefelPoint base, Matrix delta) {
    return HorizontalTangent(std::move(base), std::move(delta));
  }
  const StiefelPoint &base() const noexcept { return base_; }
  const Matrix &vector() const noexcept { return delta_; }
  double norm() const { return delta_.norm(); }

private:
  HorizontalTangent(StiefelPoint base, Matrix delta)
      : base_(std::move(base)), delta_(std::move(delta)) {}
  StiefelPoint base_;
  Matrix delta_;
};

/// Riemannian (Karcher) mean on Gr(p, k) by the unit-step fixed point
/// G <- exp_G(mean log_G(M_i)) on Stiefel representatives. The observer sees
/// the current representative and the mean-log norm.
template <class Observer = NoObserver>
BarycenterResult<GrassmannPoint>
riemannian_mean_grassmann(std::span<const GrassmannPoint> samples,
                          const SolverControls &controls = {},
                          Observer observer = {}) {
  detail::require_samples(samples);
  controls.validate(samples.size());
  std::vector<StiefelPoint> reps;
  reps.reserve(samples.size());
  for (const auto &s : samples)
    reps.push_back(range_basis(s));

  auto result = rl_fixed_point(
      std::span<const StiefelPoint>(reps),
      [](const HorizontalTangent &delta) {
        return gr_exp(delta.base(), delta.vector());
      },
      [](const StiefelPoint &g, const StiefelPoint &m) {
        return HorizontalTangent::unchecked(g, gr_log(g, m));
      },
      controls, observer);
  return {stiefel_to_grassmann(result.point), result.iterations,
          result.final_step_norm, result.converged};
}

} // namespace rlmean
