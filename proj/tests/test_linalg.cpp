#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rlmean/linalg.hpp"

using namespace rlmean;

namespace {

Matrix identity(Eigen::Index k) { return Matrix::Identity(k, k); }

double orthonormality_residual(const Matrix &u) {
  return (u.transpose() * u - identity(u.cols())).norm();
}

} // namespace

// ---------------------------------------------------------------- polar

TEST(PolarFactor, OrthonormalInputIsFixed) {
  oracle::Rng rng(1);
  const Matrix u = oracle::random_stiefel(7, 3, rng).matrix();
  EXPECT_LT((polar_orthogonal_factor(u) - u).norm(), 1e-12);
}

TEST(PolarFactor, PositiveDiagonalHasIdentityFactor) {
  Matrix x(2, 2);
  x << 2, 0, 0, 3;
  EXPECT_LT((polar_orthogonal_factor(x) - identity(2)).norm(), 1e-15);
}

TEST(PolarFactor, RandomInputReconstructsWithSymmetricPsdFactor) {
  oracle::Rng rng(2);
  const Matrix x = oracle::gaussian(5, 3, rng);
  const Matrix u = polar_orthogonal_factor(x);
  const Matrix s = u.transpose() * x;
  EXPECT_LT(orthonormality_residual(u), 1e-12);
  EXPECT_LT((s - s.transpose()).norm(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(s));
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_LT((x - u * s).norm(), 1e-10);
}

TEST(PolarFactor, RankDeficientInputThrows) {
  Matrix x = Matrix::Zero(4, 2);
  x(0, 0) = 1.0;
  x(1, 0) = 1.0;
  EXPECT_THROW(polar_orthogonal_factor(x), RankDeficient);
  EXPECT_THROW(polar_orthogonal_factor(Matrix::Zero(3, 2)), RankDeficient);
}

TEST(PolarFactor, RejectsWideAndNonFinite) {
  EXPECT_THROW(polar_orthogonal_factor(Matrix::Ones(2, 3)), InvalidArgument);
  Matrix x = identity(2);
  x(0, 1) = std::nan("");
  EXPECT_THROW(polar_orthogonal_factor(x), InvalidArgument);
}

// ------------------------------------------------------------------- QR

TEST(QrPositive, PaddedIdentity) {
  const Matrix x = Matrix::Identity(5, 3);
  const auto f = qr_positive(x);
  EXPECT_LT((f.q - x).norm(), 1e-15);
  EXPECT_LT((f.r - identity(3)).norm(), 1e-15);
}

TEST(QrPositive, SignConventionFlipsColumn) {
  Matrix x(2, 2);
  x << -1, 0, 0, 1;
  const auto f = qr_positive(x);
  EXPECT_LT((f.q - x).norm(), 1e-15);
  EXPECT_LT((f.r - identity(2)).norm(), 1e-15);
}

TEST(QrPositive, MatchesModifiedGramSchmidt) {
  oracle::Rng rng(3);
  const Matrix x = oracle::gaussian(6, 3, rng);
  const auto f = qr_positive(x);
  const auto gs = oracle::modified_gram_schmidt(x);
  for (Eigen::Index j = 0; j < 3; ++j)
    EXPECT_LT((f.q.col(j) - gs.q.col(j)).norm(), 1e-10) << "column " << j;
  EXPECT_LT((f.r - gs.r).norm(), 1e-10);
  EXPECT_LT((f.q * f.r - x).norm(), 1e-12);
  EXPECT_EQ((f.r - Matrix(f.r.triangularView<Eigen::Upper>())).norm(), 0.0);
}

TEST(QrPositive, RankDeficientThrows) {
  Matrix x(3, 2);
  x << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(qr_positive(x), RankDeficient);
}

TEST(FactorizationProperty, IdempotentOnOrthonormalOutput) {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix x = oracle::gaussian(8, 4, rng);
    const Matrix u = polar_orthogonal_factor(x);
    EXPECT_LT((polar_orthogonal_factor(u) - u).norm(), 1e-12);
    const Matrix q = qr_positive(x).q;
    EXPECT_LT((qr_positive(q).q - q).norm(), 1e-12);
  }
}

TEST(OrthonormalComplement, CompletesBasis) {
  oracle::Rng rng(5);
  const Matrix g = oracle::random_stiefel(7, 3, rng).matrix();
  const Matrix c = orthonormal_complement(g);
  ASSERT_EQ(c.cols(), 4);
  EXPECT_LT((g.transpose() * c).norm(), 1e-14);
  EXPECT_LT(orthonormality_residual(c), 1e-14);
}

// -------------------------------------------------------------- sym_eig

TEST(SymEig, DiagonalInput) {
  Matrix s = Matrix::Zero(3, 3);
  s.diagonal() << 3, 2, 1;
  const auto e = sym_eig(s);
  EXPECT_LT((e.values - Vector::LinSpaced(3, 3, 1)).norm(), 1e-15);
  EXPECT_LT((e.vectors.cwiseAbs() - identity(3)).norm(), 1e-15);
}

TEST(SymEig, ZeroMatrixGivesIdentityBasis) {
  const auto e = sym_eig(Matrix::Zero(4, 4));
  EXPECT_EQ(e.values.norm(), 0.0);
  EXPECT_EQ((e.vectors - identity(4)).norm(), 0.0);
}

TEST(SymEig, RandomReconstructionAndOrthogonality) {
  oracle::Rng rng(6);
  const Matrix s = oracle::random_symmetric(8, rng);
  const auto e = sym_eig(s);
  const Matrix recon = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  EXPECT_LT((recon - s).norm(), 1e-10 * s.norm());
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j)
      EXPECT_LT(std::abs(e.vectors.col(i).dot(e.vectors.col(j))), 1e-12);
  EXPECT_LT(orthonormality_residual(e.vectors), 1e-12 * 8);
}

TEST(SymEig, SortedDescendingProperty) {
  oracle::Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto e = sym_eig(oracle::random_symmetric(2 + trial % 9, rng));
    for (Eigen::Index i = 0; i + 1 < e.values.size(); ++i)
      ASSERT_GE(e.values(i), e.values(i + 1));
  }
}

// ------------------------------------------------------------ expm_skew

TEST(ExpmSkew, ZeroIsIdentity) {
  EXPECT_LT((expm_skew(Matrix::Zero(5, 5)) - identity(5)).norm(), 1e-15);
}

TEST(ExpmSkew, PlanarRotation) {
  for (double theta : {std::numbers::pi / 3, 10.0, -25.0}) {
    Matrix omega(2, 2);
    omega << 0, -theta, theta, 0;
    Matrix expected(2, 2);
    expected << std::cos(theta), -std::sin(theta), std::sin(theta),
        std::cos(theta);
    EXPECT_LT((expm_skew(omega) - expected).norm(), 1e-13) << theta;
  }
}

TEST(ExpmSkew, MatchesTaylorSeries) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix omega = oracle::random_skew(5, rng, 1.0);
    EXPECT_LT((expm_skew(omega) - oracle::taylor_expm(omega, 30)).norm(),
              1e-12);
  }
}

TEST(ExpmSkew, LargeNormMatchesSquaredTaylor) {
  oracle::Rng rng(9);
  const Matrix omega = oracle::random_skew(6, rng, 12.0);
  // exp(A) = exp(A / 16)^16 with the Taylor oracle on the small argument.
  Matrix ref = oracle::taylor_expm(omega / 16.0, 30);
  for (int i = 0; i < 4; ++i)
    ref = (ref * ref).eval();
  EXPECT_LT((expm_skew(omega) - ref).norm(), 1e-11);
}

TEST(ExpmSkew, OrthogonalWithUnitDeterminant) {
  oracle::Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 2 + trial % 9;
    const Matrix w = expm_skew(oracle::random_skew(p, rng, 3.0));
    EXPECT_LT(orthonormality_residual(w), 1e-12 * p);
    EXPECT_NEAR(w.determinant(), 1.0, 1e-12);
  }
}

TEST(ExpmSkew, InverseIsNegatedArgument) {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_real_distribution<double> scale(0.0, 2.0);
    const Matrix omega = oracle::random_skew(7, rng, scale(rng));
    EXPECT_LT((expm_skew(omega) * expm_skew(-omega) - identity(7)).norm(),
              1e-12);
  }
}

TEST(ExpmSkew, RejectsNonSkew) {
  EXPECT_THROW(expm_skew(identity(3)), InvalidArgument);
  EXPECT_THROW(expm_skew(Matrix::Ones(2, 3)), InvalidArgument);
}

// ----------------------------------------------------- solve_sym_product

TEST(SolveSymProduct, ScalarCases) {
  EXPECT_LT((solve_sym_product(identity(4)) - identity(4)).norm(), 1e-14);
  EXPECT_LT((solve_sym_product(2.0 * identity(4)) - 0.5 * identity(4)).norm(),
            1e-14);
}

TEST(SolveSymProduct, MatchesKroneckerOracle) {
  oracle::Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = identity(4) + 0.2 * oracle::gaussian(4, 4, rng);
    const Matrix s = solve_sym_product(a);
    EXPECT_LT((s - s.transpose()).norm(), 1e-15);
    EXPECT_LT((a * s + s * a.transpose() - 2.0 * identity(4)).norm(), 1e-10);
    EXPECT_LT((s - oracle::kron_solve_sym_product(a)).norm(), 1e-10);
  }
}

TEST(SolveSymProduct, ResidualProperty) {
  oracle::Rng rng(13);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = dim(rng);
    const Matrix a = identity(k) + 0.3 * oracle::gaussian(k, k, rng) /
                                       std::sqrt(static_cast<double>(k));
    const Matrix s = solve_sym_product(a);
    ASSERT_LT((sym(a * s) - identity(k)).norm(), 1e-10) << "trial " << trial;
  }
}

TEST(SolveSymProduct, SingularSystemIsUnsolvable) {
  // A skew: S -> A S - S A annihilates the identity.
  Matrix a(2, 2);
  a << 0, 1, -1, 0;
  EXPECT_THROW(solve_sym_product(a), Unsolvable);
}

// -------------------------------------------------- solve_upper_from_sym

TEST(SolveUpperFromSym, ScalarCases) {
  EXPECT_LT((solve_upper_from_sym(identity(4)) - identity(4)).norm(), 1e-14);
  EXPECT_LT(
      (solve_upper_from_sym(3.0 * identity(4)) - identity(4) / 3.0).norm(),
      1e-14);
}

TEST(SolveUpperFromSym, MatchesDenseOracle) {
  oracle::Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix b = identity(4) + 0.2 * oracle::gaussian(4, 4, rng);
    const Matrix r = solve_upper_from_sym(b);
    EXPECT_EQ(Matrix(r.triangularView<Eigen::StrictlyLower>()).norm(), 0.0);
    EXPECT_LT((sym(b * r) - identity(4)).norm(), 1e-10);
    EXPECT_LT((r - oracle::dense_solve_upper(b)).norm(), 1e-10);
  }
}

TEST(SolveUpperFromSym, ResidualProperty) {
  oracle::Rng rng(15);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = dim(rng);
    const Matrix b = identity(k) + 0.3 * oracle::gaussian(k, k, rng) /
                                       std::sqrt(static_cast<double>(k));
    const Matrix r = solve_upper_from_sym(b);
    ASSERT_LT((sym(b * r) - identity(k)).norm(), 1e-10) << "trial " << trial;
  }
}

TEST(SolveUpperFromSym, SingularSystemIsUnsolvable) {
  EXPECT_THROW(solve_upper_from_sym(Matrix::Zero(3, 3)), Unsolvable);
}

// ------------------------------------------------------------- Riccati

TEST(Riccati, ZeroTangent) {
  const Matrix s = solve_riccati_orthographic(Matrix::Zero(3, 3),
                                              Matrix::Zero(3, 3));
  EXPECT_EQ(s.norm(), 0.0);
}

TEST(Riccati, ScalarQuadraticRoot) {
  for (double q : {0.01, 0.1, 0.3, 0.9, 0.99}) {
    const Matrix s =
        solve_riccati_orthographic(Matrix::Zero(3, 3), q * identity(3));
    const double root = 1.0 - std::sqrt(1.0 - q);
    EXPECT_LT((s - root * identity(3)).norm(), 1e-11) << q;
  }
}

TEST(Riccati, ProducesOrthonormalPoint) {
  oracle::Rng rng(16);
  for (int trial = 0; trial < 60; ++trial) {
    const auto u = oracle::random_stiefel(10, 5, rng);
    const auto xi = oracle::random_tangent(u, rng, 0.1 + 0.8 * (trial % 3) / 2);
    const Matrix &um = u.matrix();
    const Matrix &z = xi.vector();
    const Matrix s =
        solve_riccati_orthographic(um.transpose() * z, z.transpose() * z);
    const Matrix v = um + z - um * s;
    EXPECT_LT(orthonormality_residual(v), 1e-10);
  }
}

TEST(Riccati, CorrectionRestoresOrthonormalityOfDriftedBase) {
  oracle::Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = oracle::random_stiefel(10, 5, rng);
    const Matrix drifted = u.matrix() + 1e-9 * oracle::gaussian(10, 5, rng);
    const Matrix w = drifted + oracle::random_tangent(u, rng, 0.4).vector();
    const Matrix s = solve_orthographic_correction(
        drifted.transpose() * w, drifted.transpose() * drifted,
        w.transpose() * w);
    EXPECT_LT((s - s.transpose()).norm(), 1e-15);
    EXPECT_LT(orthonormality_residual(w - drifted * s), 1e-13);
  }
}

TEST(Riccati, DivergenceReportsNoConvergence) {
  // 2 s = q + s^2 has no real root for q > 1.
  EXPECT_THROW(
      solve_riccati_orthographic(Matrix::Zero(2, 2), 2.0 * identity(2)),
      NoConvergence);
}

// ----------------------------------------------------- principal angles

TEST(PrincipalAngles, IdenticalSubspaces) {
  oracle::Rng rng(17);
  const Matrix u = oracle::random_stiefel(6, 3, rng).matrix();
  EXPECT_LT(principal_angles(u, u).norm(), 1e-7);
  // Rotating the basis inside the subspace changes nothing.
  const Matrix o = qr_positive(oracle::gaussian(3, 3, rng)).q;
  EXPECT_LT(principal_angles(u, u * o).norm(), 1e-7);
}

TEST(PrincipalAngles, OneSharedOneOrthogonalDirection) {
  Matrix u = Matrix::Zero(4, 2);
  u(0, 0) = 1;
  u(1, 1) = 1;
  Matrix v = Matrix::Zero(4, 2);
  v(0, 0) = 1;
  v(2, 1) = 1;
  const Vector theta = principal_angles(u, v);
  EXPECT_NEAR(theta(0), 0.0, 1e-15);
  EXPECT_NEAR(theta(1), std::numbers::pi / 2, 1e-15);
}

TEST(PrincipalAngles, MatchesGramOracle) {
  oracle::Rng rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix u = oracle::random_stiefel(9, 4, rng).matrix();
    const Matrix v = oracle::random_stiefel(9, 4, rng).matrix();
    const Vector theta = principal_angles(u, v);
    const Vector c = oracle::gram_cosines(u, v);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(std::cos(theta(i)), c(i), 1e-10);
      EXPECT_GE(theta(i), 0.0);
      EXPECT_LE(theta(i), std::numbers::pi / 2);
      if (i > 0)
        EXPECT_GE(theta(i), theta(i - 1));
    }
  }
}

TEST(PrincipalAngles, SmallAnglesKeepRelativeAccuracy) {
  Matrix u = Matrix::Zero(3, 1);
  u(0, 0) = 1;
  const double angle = 1e-9;
  Matrix v = Matrix::Zero(3, 1);
  v(0, 0) = std::cos(angle);
  v(1, 0) = std::sin(angle);
  EXPECT_NEAR(principal_angles(u, v)(0), angle, 1e-20);
}

TEST(PrincipalAngles, RejectsNonOrthonormal) {
  EXPECT_THROW(principal_angles(Matrix::Ones(3, 1), Matrix::Ones(3, 1)),
               InvalidArgument);
}
