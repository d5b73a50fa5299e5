#pragma once

// Dense small-matrix kernels shared by the manifold modules: decompositions,
// the skew-symmetric matrix exponential and the structured solvers behind the
// inverse retractions.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rlmean/errors.hpp"

namespace rlmean {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric part (M + M^T) / 2.
inline Matrix sym(const Matrix &m) { return 0.5 * (m + m.transpose()); }

/// Skew-symmetric part (M - M^T) / 2.
inline Matrix skew(const Matrix &m) { return 0.5 * (m - m.transpose()); }

/// Strictly lower-triangular part; diagonal and upper entries are zeroed.
inline Matrix strict_lower(const Matrix &m) {
  Matrix out = m.triangularView<Eigen::StrictlyLower>();
  return out;
}

inline bool all_finite(const Matrix &m) { return m.allFinite(); }

inline void require_finite(const Matrix &m, const char *what) {
  if (!m.allFinite())
    throw InvalidArgument(std::string(what) + ": non-finite entry");
}

namespace detail {

inline double rank_tolerance(Eigen::Index p, Eigen::Index k, double scale) {
  return 1e-12 * static_cast<double>(std::max(p, k)) * scale;
}

// Tolerance for "is this input symmetric / skew-symmetric" checks.
inline double structure_tolerance(const Matrix &m) {
  return 1e-10 * std::max(1.0, m.norm());
}

} // namespace detail

/// Orthogonal factor of the polar decomposition of a full-column-rank p x k
/// matrix, i.e. the closest matrix with orthonormal columns in Frobenius norm.
inline Matrix polar_orthogonal_factor(const Matrix &x) {
  require_finite(x, "polar_orthogonal_factor");
  if (x.cols() > x.rows() || x.cols() == 0)
    throw InvalidArgument("polar_orthogonal_factor: expected p >= k >= 1");
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &s = svd.singularValues();
  const double tol = detail::rank_tolerance(x.rows(), x.cols(), s(0));
  if (s(s.size() - 1) <= tol)
    throw RankDeficient("polar_orthogonal_factor: smallest singular value " +
                        std::to_string(s(s.size() - 1)) +
                        " below rank tolerance");
  return svd.matrixU() * svd.matrixV().transpose();
}

struct QrFactors {
  Matrix q; // p x k, orthonormal columns
  Matrix r; // k x k, upper triangular with positive diagonal
};

/// Thin QR decomposition with the positive-diagonal convention on R, which
/// makes the factorization unique.
inline QrFactors qr_positive(const Matrix &x) {
  require_finite(x, "qr_positive");
  const Eigen::Index p = x.rows();
  const Eigen::Index k = x.cols();
  if (k > p || k == 0)
    throw InvalidArgument("qr_positive: expected p >= k >= 1");

  Eigen::HouseholderQR<Matrix> qr(x);
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(p, k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  // Frobenius norm bounds sigma_max from above.
  const double tol = detail::rank_tolerance(p, k, x.norm());
  for (Eigen::Index j = 0; j < k; ++j) {
    if (std::abs(out.r(j, j)) <= tol)
      throw RankDeficient("qr_positive: |R(" + std::to_string(j) + "," +
                          std::to_string(j) + ")| below rank tolerance");
    if (out.r(j, j) < 0.0) {
      out.r.row(j) *= -1.0;
      out.q.col(j) *= -1.0;
    }
  }
  return out;
}

/// Trailing p - k columns of the full Householder Q of g: an orthonormal
/// basis of the orthogonal complement of span(g).
inline Matrix orthonormal_complement(const Matrix &g) {
  const Eigen::Index p = g.rows();
  const Eigen::Index k = g.cols();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix full = qr.householderQ() * Matrix::Identity(p, p);
  return full.rightCols(p - k);
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
struct SymEig {
  Vector values;
  Matrix vectors; // column j pairs with values(j)
};

inline SymEig sym_eig(const Matrix &s) {
  require_finite(s, "sym_eig");
  if (s.rows() != s.cols())
    throw InvalidArgument("sym_eig: matrix is not square");
  const Matrix symmetric = sym(s);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  if (solver.info() != Eigen::Success)
    throw NoConvergence("sym_eig: eigensolver failed");

  const Eigen::Index p = s.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector &ev = solver.eigenvalues();
  // Stable so that ties keep the solver's order (S = 0 gives V = I).
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ev(a) > ev(b); });

  SymEig out{Vector(p), Matrix(p, p)};
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.values(j) = ev(src);
    out.vectors.col(j) = solver.eigenvectors().col(src);
  }
  return out;
}

/// Matrix exponential of a skew-symmetric matrix by scaling and squaring with
/// the degree-13 diagonal Pade approximant. Only the skew part of the input
/// is used, so the result is orthogonal up to round-off.
inline Matrix expm_skew(const Matrix &omega) {
  require_finite(omega, "expm_skew");
  if (omega.rows() != omega.cols())
    throw InvalidArgument("expm_skew: matrix is not square");
  if ((omega + omega.transpose()).norm() >= detail::structure_tolerance(omega))
    throw InvalidArgument("expm_skew: matrix is not skew-symmetric");

  const Eigen::Index p = omega.rows();
  const Matrix id = Matrix::Identity(p, p);
  Matrix a = skew(omega);

  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    a /= std::ldexp(1.0, squarings);
  }

  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
           b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix w = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i)
    w = (w * w).eval();
  return w;
}

namespace detail {

// Index of the (i, j), i <= j, entry in the packed upper triangle.
inline Eigen::Index packed_index(Eigen::Index i, Eigen::Index j,
                                 Eigen::Index k) {
  return i * k - i * (i - 1) / 2 + (j - i);
}

// Solves the square packed system and maps singularity to Unsolvable.
inline Vector solve_packed(const Matrix &system, const Vector &rhs,
                           const char *what) {
  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw Unsolvable(std::string(what) + ": linear system is singular");
  return lu.solve(rhs);
}

} // namespace detail

/// Symmetric S with A S + S A^T = 2 I. This is the linear system behind the
/// inverse of the polar retraction, with A = U^T V.
inline Matrix solve_sym_product(const Matrix &a) {
  require_finite(a, "solve_sym_product");
  if (a.rows() != a.cols())
    throw InvalidArgument("solve_sym_product: matrix is not square");
  const Eigen::Index k = a.rows();
  const Eigen::Index m = k * (k + 1) / 2;

  Matrix system = Matrix::Zero(m, m);
  Vector rhs = Vector::Zero(m);
  for (Eigen::Index i = 0; i < k; ++i)
    rhs(detail::packed_index(i, i, k)) = 2.0;

  // Column (a, b) holds the image of the symmetric basis element E_ab.
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = r; c < k; ++c) {
      Matrix e = Matrix::Zero(k, k);
      e(r, c) = 1.0;
      e(c, r) = 1.0;
      const Matrix image = a * e + e * a.transpose();
      const Eigen::Index col = detail::packed_index(r, c, k);
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j)
          system(detail::packed_index(i, j, k), col) = image(i, j);
    }
  }

  const Vector x = detail::solve_packed(system, rhs, "solve_sym_product");
  Matrix s(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j)
      s(i, j) = s(j, i) = x(detail::packed_index(i, j, k));
  if (!s.allFinite())
    throw Unsolvable("solve_sym_product: non-finite solution");
  return s;
}

/// Upper-triangular R with B R + R^T B^T = 2 I. This is the linear system
/// behind the inverse of the QR retraction, with B = U^T V.
inline Matrix solve_upper_from_sym(const Matrix &b) {
  require_finite(b, "solve_upper_from_sym");
  if (b.rows() != b.cols())
    throw InvalidArgument("solve_upper_from_sym: matrix is not square");
  const Eigen::Index k = b.rows();
  const Eigen::Index m = k * (k + 1) / 2;

  Matrix system = Matrix::Zero(m, m);
  Vector rhs = Vector::Zero(m);
  for (Eigen::Index i = 0; i < k; ++i)
    rhs(detail::packed_index(i, i, k)) = 2.0;

  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = r; c < k; ++c) {
      // B E_rc has column c equal to B(:, r), everything else zero.
      Matrix br = Matrix::Zero(k, k);
      br.col(c) = b.col(r);
      const Matrix image = br + br.transpose();
      const Eigen::Index col = detail::packed_index(r, c, k);
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j)
          system(detail::packed_index(i, j, k), col) = image(i, j);
    }
  }

  const Vector x = detail::solve_packed(system, rhs, "solve_upper_from_sym");
  Matrix r = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j)
      r(i, j) = x(detail::packed_index(i, j, k));
  if (!r.allFinite())
    throw Unsolvable("solve_upper_from_sym: non-finite solution");
  return r;
}

struct RiccatiControls {
  double tol = 1e-14;  // relative residual of the quadratic equation
  int max_iter = 100;
};

namespace detail {

// Symmetric E with C^T E + E C = F for symmetric F.
inline Matrix solve_sym_lyapunov(const Matrix &c, const Matrix &f,
                                 const char *what) {
  const Eigen::Index k = c.rows();
  const Eigen::Index m = k * (k + 1) / 2;
  Matrix system = Matrix::Zero(m, m);
  Vector rhs(m);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j)
      rhs(packed_index(i, j, k)) = f(i, j);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index col_c = r; col_c < k; ++col_c) {
      Matrix e = Matrix::Zero(k, k);
      e(r, col_c) = 1.0;
      e(col_c, r) = 1.0;
      const Matrix image = c.transpose() * e + e * c;
      const Eigen::Index col = packed_index(r, col_c, k);
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j)
          system(packed_index(i, j, k), col) = image(i, j);
    }
  }
  const Vector x = solve_packed(system, rhs, what);
  Matrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j)
      out(i, j) = out(j, i) = x(packed_index(i, j, k));
  return out;
}

} // namespace detail

/// Symmetric S with (W - U S)^T (W - U S) = I, given K = U^T W, G = U^T U
/// and H = W^T W: the root of S G S - K^T S - S K + H - I = 0 reached by
/// Newton's method from S = 0. Each step solves C^T E + E C = F(S) with
/// C = K - G S. Using the actual Gram matrix G keeps rounding drift in U from
/// carrying over to the result.
inline Matrix solve_orthographic_correction(const Matrix &k, const Matrix &g,
                                            const Matrix &h,
                                            RiccatiControls controls = {}) {
  const char *what = "solve_orthographic_correction";
  require_finite(k, what);
  require_finite(g, what);
  require_finite(h, what);
  const Eigen::Index n = k.rows();
  if (k.cols() != n || g.rows() != n || g.cols() != n || h.rows() != n ||
      h.cols() != n)
    throw InvalidArgument(std::string(what) + ": dimension mismatch");

  const Matrix id = Matrix::Identity(n, n);
  const double scale = 1.0 + h.norm();
  Matrix s = Matrix::Zero(n, n);
  for (int it = 0; it < controls.max_iter; ++it) {
    const Matrix f =
        sym(s * g * s - k.transpose() * s - s * k + h - id);
    if (f.norm() <= controls.tol * scale)
      return s;
    Matrix step;
    try {
      step = detail::solve_sym_lyapunov(k - g * s, f, what);
    } catch (const Unsolvable &) {
      break;
    }
    s += step;
    if (!s.allFinite() || s.norm() > 1e6)
      break;
  }
  throw NoConvergence(std::string(what) + ": no convergence after " +
                      std::to_string(controls.max_iter) + " iterations");
}

/// Symmetric S solving 2 S = Q + A S - S A + S^2. A is skew (U^T xi) and Q is
/// PSD (xi^T xi); for orthonormal U the result makes U + xi - U S orthonormal.
inline Matrix solve_riccati_orthographic(const Matrix &a, const Matrix &q,
                                         RiccatiControls controls = {}) {
  require_finite(a, "solve_riccati_orthographic");
  require_finite(q, "solve_riccati_orthographic");
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows())
    throw InvalidArgument("solve_riccati_orthographic: dimension mismatch");
  const Matrix id = Matrix::Identity(a.rows(), a.rows());
  return solve_orthographic_correction(id + a, id, id + q, controls);
}

namespace detail {

inline void require_orthonormal(const Matrix &u, const char *what) {
  const Matrix gram = u.transpose() * u;
  if ((gram - Matrix::Identity(u.cols(), u.cols())).norm() >= 1e-8)
    throw InvalidArgument(std::string(what) + ": columns are not orthonormal");
}

} // namespace detail

/// Principal angles between span(U) and span(V), ascending in [0, pi/2].
/// Large angles come from the cosines (singular values of U^T V) and small
/// ones from the sines (singular values of V - U U^T V), which keeps both
/// ends accurate.
inline Vector principal_angles(const Matrix &u, const Matrix &v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw InvalidArgument("principal_angles: dimension mismatch");
  detail::require_orthonormal(u, "principal_angles");
  detail::require_orthonormal(v, "principal_angles");

  const Eigen::Index k = u.cols();
  const Matrix m = u.transpose() * v;
  // Singular values come out descending: cosines of ascending angles.
  const Vector cosines = Eigen::JacobiSVD<Matrix>(m).singularValues();
  Vector sines = Eigen::JacobiSVD<Matrix>(v - u * m).singularValues();
  std::sort(sines.data(), sines.data() + sines.size());

  Vector theta(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(i), 0.0, 1.0);
    theta(i) = (c * c < 0.5) ? std::acos(c) : std::asin(s);
  }
  std::sort(theta.data(), theta.data() + theta.size());
  return theta;
}

} // namespace rlmean
