#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "proxyci/numerics.hpp"
#include "proxyci/random.hpp"

using namespace proxyci;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = 0.0, double hi = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(ChiSquare, CdfAtZero) { EXPECT_EQ(chi_square_cdf(0.0, 5), 0.0); }

TEST(ChiSquare, CdfDf2ClosedForm) {
  EXPECT_NEAR(chi_square_cdf(5.991464547, 2), 0.95, 1e-10);
  for (double x : {0.1, 1.0, 3.0, 10.0, 40.0}) EXPECT_NEAR(chi_square_cdf(x, 2), 1.0 - std::exp(-x / 2.0), 1e-13);
}

TEST(ChiSquare, CdfDf1MatchesQuadrature) {
  const double v = chi_square_cdf(3.841, 1);
  EXPECT_NEAR(v, 0.95, 1e-4);
  EXPECT_NEAR(v, oracle::chi_square_cdf(3.841, 1), 1e-12);
}

TEST(ChiSquare, CdfMatchesQuadratureAcrossGrid) {
  for (int df = 1; df <= 30; ++df)
    for (double x : {0.01, 0.5, 1.0, 2.5, 7.0, 15.0, 30.0, 60.0, 100.0}) {
      const double ref = oracle::chi_square_cdf(x, df);
      EXPECT_NEAR(chi_square_cdf(x, df), ref, 1e-10 * ref) << "df=" << df << " x=" << x;
    }
}

TEST(ChiSquare, SurvivalComplementsCdf) {
  for (int df : {1, 2, 7, 30})
    for (double x : {0.3, 2.0, 9.0, 45.0}) EXPECT_NEAR(chi_square_sf(x, df) + chi_square_cdf(x, df), 1.0, 1e-14);
  EXPECT_NEAR(chi_square_sf(20.0, 2), std::exp(-10.0), 1e-18);
}

TEST(ChiSquare, QuantileClosedForms) {
  EXPECT_NEAR(chi_square_quantile(0.95, 2), -2.0 * std::log(0.05), 1e-9);
  EXPECT_NEAR(chi_square_quantile(0.5, 2), 2.0 * std::log(2.0), 1e-9);
}

TEST(ChiSquare, QuantileAgainstQuadrature) {
  const double v = chi_square_quantile(0.95, 10);
  EXPECT_NEAR(oracle::chi_square_cdf(v, 10), 0.95, 1e-9);
}

TEST(ChiSquare, QuantileRoundTrip) {
  for (int df = 1; df <= 30; ++df)
    for (double p : {0.001, 0.05, 0.3, 0.5, 0.9, 0.99, 0.9999}) EXPECT_NEAR(chi_square_cdf(chi_square_quantile(p, df), df), p, 1e-7);
}

TEST(ChiSquare, RejectsBadArguments) {
  EXPECT_THROW(chi_square_cdf(-1.0, 2), Error);
  EXPECT_THROW(chi_square_cdf(1.0, 0), Error);
  EXPECT_THROW(chi_square_cdf(std::nan(""), 2), Error);
  EXPECT_THROW(chi_square_quantile(0.0, 2), Error);
  EXPECT_THROW(chi_square_quantile(1.0, 2), Error);
}

TEST(Determinant, Identity) { EXPECT_DOUBLE_EQ(determinant(Matrix::identity(3)), 1.0); }

TEST(Determinant, Diagonal) { EXPECT_DOUBLE_EQ(determinant(Matrix{{2, 0}, {0, 3}}), 6.0); }

TEST(Determinant, MatchesCofactorExpansion) {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix m = random_matrix(rng, 5, 5);
    EXPECT_NEAR(determinant(m), oracle::cofactor_determinant(m), 1e-10);
  }
}

TEST(Determinant, SingularIsZero) { EXPECT_EQ(determinant(Matrix{{1, 2}, {2, 4}}), 0.0); }

TEST(Determinant, RejectsNonSquare) { EXPECT_THROW(determinant(Matrix(2, 3)), Error); }

TEST(SolveGram, IdentityRows) {
  const Vector s = solve_gram(Matrix::identity(3), Vector{1, 0, 0});
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_NEAR(s[1], 0.0, 1e-15);
  EXPECT_NEAR(s[2], 0.0, 1e-15);
}

TEST(SolveGram, ScaledIdentity) {
  const Vector s = solve_gram(Matrix{{2, 0}, {0, 2}}, Vector{4, 4});
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0, 1e-15);
}

TEST(SolveGram, MultiplyBack) {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix q = random_matrix(rng, 3, 6);
    const Vector rhs = random_vector(rng, 3);
    const Vector s = solve_gram(q, rhs);
    const Matrix g = q * q.transpose();
    const Vector back = g * s;
    double err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) err += (back[i] - rhs[i]) * (back[i] - rhs[i]);
    EXPECT_LE(std::sqrt(err), 1e-10);
  }
}

TEST(SolveGram, RankDeficientThrows) {
  try {
    solve_gram(Matrix{{1, 2, 3}, {2, 4, 6}}, Vector{1, 1});
    FAIL() << "expected SingularGram";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularGram);
  }
}

TEST(ProjectionResidual, SquareInvertibleGivesZero) {
  Rng rng(3);
  const Matrix q = random_matrix(rng, 4, 4);
  for (double v : projection_residual(random_vector(rng, 4), q)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(ProjectionResidual, CoordinateProjection) {
  const Vector xi = projection_residual(Vector{5, 3, 4}, Matrix{{1, 0, 0}});
  EXPECT_NEAR(xi[0], 0.0, 1e-15);
  EXPECT_NEAR(xi[1], 3.0, 1e-15);
  EXPECT_NEAR(xi[2], 4.0, 1e-15);
}

TEST(ProjectionResidual, MatchesNormalEquations) {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix q = random_matrix(rng, 4, 9);
    const Vector v = random_vector(rng, 9);
    const Vector xi = projection_residual(v, q);
    const auto ref = oracle::ls_residual(v, q);
    for (std::size_t c = 0; c < 9; ++c) EXPECT_NEAR(xi[c], ref[c], 1e-9);
  }
}

TEST(ProjectionResidual, ResidualOrthogonalToRows) {
  Rng rng(23);
  const Matrix q = random_matrix(rng, 3, 7);
  const Vector xi = projection_residual(random_vector(rng, 7), q);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(dot(q.row(r), xi), 0.0, 1e-12);
}

TEST(ProjectionResidual, DimensionErrors) {
  EXPECT_THROW(projection_residual(Vector{1, 2}, Matrix{{1, 0, 0}}), Error);
  EXPECT_THROW(projection_residual(Vector{1, 2}, Matrix{{1, 0}, {0, 1}, {1, 1}}), Error);
}

TEST(SingularValues, DiagonalAndRankOne) {
  const Vector sv = singular_values(Matrix{{3, 0, 0}, {0, -2, 0}});
  ASSERT_EQ(sv.size(), 2u);
  EXPECT_NEAR(sv[0], 3.0, 1e-12);
  EXPECT_NEAR(sv[1], 2.0, 1e-12);
  const Vector r1 = singular_values(Matrix{{1, 2}, {2, 4}, {3, 6}});
  EXPECT_NEAR(r1[1], 0.0, 1e-12);
}

TEST(SingularValues, MatchEigen) {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix m = random_matrix(rng, 4, 7, -1.0, 1.0);
    const Vector sv = singular_values(m);
    const Eigen::VectorXd ref = Eigen::JacobiSVD<Eigen::MatrixXd>(oracle::to_eigen(m)).singularValues();
    for (std::size_t i = 0; i < sv.size(); ++i) EXPECT_NEAR(sv[i], ref(static_cast<Eigen::Index>(i)), 1e-12);
  }
}

TEST(DiagCovariance, RejectsNonPositive) {
  EXPECT_THROW(DiagCovariance(Vector{1.0, 0.0}), Error);
  EXPECT_THROW(DiagCovariance(Vector{}), Error);
}
