#pragma once

// The Grassmann manifold Gr(p, k) represented as rank-k orthogonal
// projectors in the space of symmetric p x p matrices. Geodesic tools work on
// Stiefel representatives.

#include <cmath>
#include <string>
#include <utility>

#include "rlmean/errors.hpp"
#include "rlmean/linalg.hpp"
#include "rlmean/stiefel.hpp"

namespace rlmean {

class GrassmannPoint {
public:
  /// Validates symmetry, idempotence and an integral trace.
  explicit GrassmannPoint(Matrix p) : p_(std::move(p)) {
    require_finite(p_, "GrassmannPoint");
    if (p_.rows() != p_.cols() || p_.rows() == 0)
      throw InvalidArgument("GrassmannPoint: matrix is not square");
    const double asym = (p_ - p_.transpose()).norm();
    const double idem = (p_ * p_ - p_).norm();
    const double trace = p_.trace();
    const double rank = std::round(trace);
    if (!(asym < kManifoldTol) || !(idem < kManifoldTol) ||
        !(std::abs(trace - rank) < 1e-6) || rank < 1.0)
      throw InvalidArgument("GrassmannPoint: not a rank-k orthogonal projector "
                            "(asymmetry " + std::to_string(asym) +
                            ", idempotence " + std::to_string(idem) +
                            ", trace " + std::to_string(trace) + ")");
    k_ = static_cast<Eigen::Index>(rank);
  }

  static GrassmannPoint unchecked(Matrix p, Eigen::Index k) {
    GrassmannPoint out;
    out.p_ = std::move(p);
    out.k_ = k;
    return out;
  }

  const Matrix &matrix() const noexcept { return p_; }
  Eigen::Index p() const noexcept { return p_.rows(); }
  Eigen::Index k() const noexcept { return k_; }

private:
  GrassmannPoint() = default;
  Matrix p_;
  Eigen::Index k_ = 0;
};

class GrassmannTangent {
public:
  /// Validates that xi is symmetric with P xi + xi P = xi.
  GrassmannTangent(GrassmannPoint base, Matrix xi)
      : base_(std::move(base)), xi_(std::move(xi)) {
    require_finite(xi_, "GrassmannTangent");
    if (xi_.rows() != base_.p() || xi_.cols() != base_.p())
      throw InvalidArgument("GrassmannTangent: dimension mismatch");
    const Matrix &pm = base_.matrix();
    const double residual = (pm * xi_ + xi_ * pm - xi_).norm();
    const double asym = (xi_ - xi_.transpose()).norm();
    if (!(residual < kManifoldTol) || !(asym < kManifoldTol))
      throw InvalidArgument("GrassmannTangent: ||P xi + xi P - xi|| = " +
                            std::to_string(residual));
  }

  static GrassmannTangent unchecked(GrassmannPoint base, Matrix xi) {
    return GrassmannTangent(std::move(base), std::move(xi), Unchecked{});
  }

  const GrassmannPoint &base() const noexcept { return base_; }
  const Matrix &vector() const noexcept { return xi_; }
  double norm() const { return xi_.norm(); }

private:
  struct Unchecked {};
  GrassmannTangent(GrassmannPoint base, Matrix xi, Unchecked)
      : base_(std::move(base)), xi_(std::move(xi)) {}

  GrassmannPoint base_;
  Matrix xi_;
};

/// pi(U) = U U^T.
inline GrassmannPoint stiefel_to_grassmann(const StiefelPoint &u) {
  return GrassmannPoint::unchecked(u.matrix() * u.matrix().transpose(), u.k());
}

/// Euclidean projection of a symmetric matrix onto Gr(p, k): the projector
/// onto its top-k eigenvectors.
inline GrassmannPoint proj_to_grassmann(const Matrix &x, Eigen::Index k) {
  if (x.rows() != x.cols())
    throw InvalidArgument("proj_to_grassmann: matrix is not square");
  if (k < 1 || k > x.rows())
    throw InvalidArgument("proj_to_grassmann: expected 1 <= k <= p");
  if ((x - x.transpose()).norm() >= detail::structure_tolerance(x))
    throw InvalidArgument("proj_to_grassmann: matrix is not symmetric");
  const SymEig eig = sym_eig(x);
  if (k < x.rows()) {
    const double gap = eig.values(k - 1) - eig.values(k);
    if (gap <= 1e-10 * x.norm())
      throw EigenGapDegenerate("proj_to_grassmann: eigenvalue gap " +
                               std::to_string(gap) + " at index " +
                               std::to_string(k));
  }
  const Matrix vk = eig.vectors.leftCols(k);
  return GrassmannPoint::unchecked(vk * vk.transpose(), k);
}

/// Orthonormal basis of range(P): eigenvectors whose eigenvalue exceeds 1/2.
inline StiefelPoint range_basis(const GrassmannPoint &p) {
  const SymEig eig = sym_eig(p.matrix());
  Eigen::Index count = 0;
  while (count < eig.values.size() && eig.values(count) > 0.5)
    ++count;
  if (count == 0)
    throw InvalidArgument("range_basis: projector has empty range");
  return StiefelPoint::unchecked(eig.vectors.leftCols(count));
}

/// Orthogonal projection onto the tangent space at P: 2 sym((I - P) Z P).
inline GrassmannTangent tangent_project_gr(const GrassmannPoint &p,
                                           const Matrix &z) {
  if (z.rows() != p.p() || z.cols() != p.p())
    throw InvalidArgument("tangent_project_gr: dimension mismatch");
  const Matrix &pm = p.matrix();
  const Matrix complement = Matrix::Identity(p.p(), p.p()) - pm;
  return GrassmannTangent::unchecked(p, 2.0 * sym(complement * z * pm));
}

/// Projection-based lifting on Gr(p, k): tangent projection of M - P.
inline GrassmannTangent lift_grassmann(const GrassmannPoint &p,
                                       const GrassmannPoint &m) {
  if (m.p() != p.p())
    throw InvalidArgument("lift_grassmann: dimension mismatch");
  return tangent_project_gr(p, m.matrix() - p.matrix());
}

/// Projection-based retraction on Gr(p, k): projection of P + xi.
inline GrassmannPoint retract_grassmann(const GrassmannTangent &xi) {
  return proj_to_grassmann(xi.base().matrix() + xi.vector(), xi.base().k());
}

/// Grassmann exponential on a Stiefel representative. Delta must be
/// horizontal (U^T Delta = 0). With Delta = W S Y^T the endpoint is
/// U Y cos(S) Y^T + W sin(S) Y^T.
inline StiefelPoint gr_exp(const StiefelPoint &u, const Matrix &delta) {
  require_finite(delta, "gr_exp");
  if (delta.rows() != u.p() || delta.cols() != u.k())
    throw InvalidArgument("gr_exp: dimension mismatch");
  if (!((u.matrix().transpose() * delta).norm() < kManifoldTol))
    throw InvalidArgument("gr_exp: tangent is not horizontal");

  Eigen::JacobiSVD<Matrix> svd(delta, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &s = svd.singularValues();
  const Matrix &w = svd.matrixU();
  const Matrix &y = svd.matrixV();
  const Vector cos_s = s.array().cos();
  const Vector sin_s = s.array().sin();
  Matrix out = u.matrix() * y * cos_s.asDiagonal() * y.transpose() +
               w * sin_s.asDiagonal() * y.transpose();
  return StiefelPoint::unchecked(std::move(out));
}

/// Grassmann logarithm on Stiefel representatives: the horizontal tangent at
/// U pointing to span(V). With (I - U U^T) V (U^T V)^{-1} = W S Y^T the
/// result is W atan(S) Y^T.
inline Matrix gr_log(const StiefelPoint &u, const StiefelPoint &v) {
  detail::require_same_shape(u, v, "gr_log");
  const Matrix m = u.matrix().transpose() * v.matrix();
  Eigen::JacobiSVD<Matrix> msvd(m);
  const Vector &ms = msvd.singularValues();
  if (ms(ms.size() - 1) <= 1e-10)
    throw CutLocus("gr_log: right principal angle between subspaces");

  const Matrix normal = v.matrix() - u.matrix() * m;
  // normal * m^{-1}, computed as (m^{-T} normal^T)^T.
  const Matrix x =
      m.transpose().partialPivLu().solve(normal.transpose()).transpose();
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector angles = svd.singularValues().array().atan();
  return svd.matrixU() * angles.asDiagonal() * svd.matrixV().transpose();
}

/// Squared Riemannian distance on Gr(p, k): the sum of squared principal
/// angles between range(P) and range(Q).
inline double gr_distance_sq(const GrassmannPoint &p, const GrassmannPoint &q) {
  if (p.p() != q.p() || p.k() != q.k())
    throw InvalidArgument("gr_distance_sq: dimension mismatch");
  return principal_angles(range_basis(p).matrix(), range_basis(q).matrix())
      .squaredNorm();
}

} // namespace rlmean
