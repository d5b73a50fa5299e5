#pragma once

// The Stiefel manifold St(p, k) of p x k matrices with orthonormal columns,
// embedded in R^{p x k} with the Euclidean metric.

#include <string>
#include <utility>

#include "rlmean/errors.hpp"
#include "rlmean/linalg.hpp"

namespace rlmean {

/// Constraint tolerance for accepting a point or tangent vector.
inline constexpr double kManifoldTol = 1e-8;

class StiefelPoint {
public:
  /// Validates U^T U = I within kManifoldTol.
  explicit StiefelPoint(Matrix u) : u_(std::move(u)) {
    require_finite(u_, "StiefelPoint");
    if (u_.cols() == 0 || u_.cols() > u_.rows())
      throw InvalidArgument("StiefelPoint: expected p >= k >= 1");
    const double residual =
        (u_.transpose() * u_ - Matrix::Identity(u_.cols(), u_.cols())).norm();
    if (!(residual < kManifoldTol))
      throw InvalidArgument("StiefelPoint: ||U^T U - I|| = " +
                            std::to_string(residual));
  }

  /// For results that are orthonormal by construction.
  static StiefelPoint unchecked(Matrix u) {
    StiefelPoint out;
    out.u_ = std::move(u);
    return out;
  }

  const Matrix &matrix() const noexcept { return u_; }
  Eigen::Index p() const noexcept { return u_.rows(); }
  Eigen::Index k() const noexcept { return u_.cols(); }

private:
  StiefelPoint() = default;
  Matrix u_;
};

class StiefelTangent {
public:
  /// Validates U^T xi + xi^T U = 0 within kManifoldTol.
  StiefelTangent(StiefelPoint base, Matrix xi)
      : base_(std::move(base)), xi_(std::move(xi)) {
    require_finite(xi_, "StiefelTangent");
    if (xi_.rows() != base_.p() || xi_.cols() != base_.k())
      throw InvalidArgument("StiefelTangent: dimension mismatch");
    const Matrix a = base_.matrix().transpose() * xi_;
    const double residual = (a + a.transpose()).norm();
    if (!(residual < kManifoldTol))
      throw InvalidArgument("StiefelTangent: ||U^T xi + xi^T U|| = " +
                            std::to_string(residual));
  }

  static StiefelTangent unchecked(StiefelPoint base, Matrix xi) {
    return StiefelTangent(std::move(base), std::move(xi), Unchecked{});
  }

  const StiefelPoint &base() const noexcept { return base_; }
  const Matrix &vector() const noexcept { return xi_; }
  double norm() const { return xi_.norm(); }

private:
  struct Unchecked {};
  StiefelTangent(StiefelPoint base, Matrix xi, Unchecked)
      : base_(std::move(base)), xi_(std::move(xi)) {}

  StiefelPoint base_;
  Matrix xi_;
};

/// Euclidean projection of a full-column-rank matrix onto St(p, k).
inline StiefelPoint proj_to_stiefel(const Matrix &x) {
  return StiefelPoint::unchecked(polar_orthogonal_factor(x));
}

/// Orthogonal projection onto the tangent space at U: Z - U sym(U^T Z).
inline StiefelTangent tangent_project(const StiefelPoint &u, const Matrix &z) {
  if (z.rows() != u.p() || z.cols() != u.k())
    throw InvalidArgument("tangent_project: dimension mismatch");
  const Matrix &um = u.matrix();
  return StiefelTangent::unchecked(u, z - um * sym(um.transpose() * z));
}

/// Polar retraction uf(U + xi).
inline StiefelPoint retract_polar(const StiefelTangent &xi) {
  return proj_to_stiefel(xi.base().matrix() + xi.vector());
}

/// QR retraction qf(U + xi).
inline StiefelPoint retract_qr(const StiefelTangent &xi) {
  return StiefelPoint::unchecked(
      qr_positive(xi.base().matrix() + xi.vector()).q);
}

namespace detail {

inline void require_same_shape(const StiefelPoint &u, const StiefelPoint &v,
                               const char *what) {
  if (u.p() != v.p() || u.k() != v.k())
    throw InvalidArgument(std::string(what) + ": dimension mismatch");
}

} // namespace detail

/// Inverse of the polar retraction: xi = V S - U with S symmetric solving
/// (U^T V) S + S (V^T U) = 2 I. The result maps back to V only when S is
/// positive definite; otherwise it is still returned, and only a singular
/// system throws.
inline StiefelTangent inv_retract_polar(const StiefelPoint &u,
                                        const StiefelPoint &v) {
  detail::require_same_shape(u, v, "inv_retract_polar");
  const Matrix s = solve_sym_product(u.matrix().transpose() * v.matrix());
  return StiefelTangent::unchecked(u, v.matrix() * s - u.matrix());
}

/// Inverse of the QR retraction: xi = V R - U with R upper triangular solving
/// sym((U^T V) R) = I. As for the polar case, R without a positive diagonal
/// is returned as is.
inline StiefelTangent inv_retract_qr(const StiefelPoint &u,
                                     const StiefelPoint &v) {
  detail::require_same_shape(u, v, "inv_retract_qr");
  const Matrix r = solve_upper_from_sym(u.matrix().transpose() * v.matrix());
  return StiefelTangent::unchecked(u, v.matrix() * r - u.matrix());
}

/// Inverse of the orthographic retraction, also the projection-based lifting:
/// the tangent projection of V - U at U.
inline StiefelTangent lift_orthographic(const StiefelPoint &u,
                                        const StiefelPoint &v) {
  detail::require_same_shape(u, v, "lift_orthographic");
  return tangent_project(u, v.matrix() - u.matrix());
}

/// Orthographic retraction V = U + xi - U S, where the correction U S lies in
/// the normal space at U and S solves the associated Riccati equation.
inline StiefelPoint retract_orthographic(const StiefelTangent &xi,
                                         RiccatiControls controls = {}) {
  const Matrix &u = xi.base().matrix();
  const Matrix &z = xi.vector();
  const Matrix w = u + z;
  const Matrix s = solve_orthographic_correction(
      u.transpose() * w, u.transpose() * u, w.transpose() * w, controls);
  return StiefelPoint::unchecked(w - u * s);
}

/// Differential of qf at G applied to M - G. At an orthonormal G the
/// triangular factor is the identity, so
///   dqf(G)[D] = G_perp G_perp^T D + G (tril(G^T D) - tril(G^T D)^T)
/// with tril the strictly lower part.
inline StiefelTangent lift_qr_differential(const StiefelPoint &g,
                                           const StiefelPoint &m) {
  detail::require_same_shape(g, m, "lift_qr_differential");
  const Matrix &gm = g.matrix();
  const Matrix d = m.matrix() - gm;
  const Matrix complement = orthonormal_complement(gm);
  const Matrix lower = strict_lower(gm.transpose() * d);
  Matrix xi = complement * (complement.transpose() * d) +
              gm * (lower - lower.transpose());
  return StiefelTangent::unchecked(g, std::move(xi));
}

} // namespace rlmean
