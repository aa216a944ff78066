#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpmor/numerics.hpp"

#include <cstring>
#include <random>
#include <sstream>

using namespace dpmor;
using namespace dpmor::numerics;

namespace {

DenseMatrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  DenseMatrix M(r, c);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = n(rng);
  return M;
}

SparseMatrix to_sparse(const DenseMatrix& A) {
  SparseMatrix S = A.sparseView();
  S.makeCompressed();
  return S;
}

// Plain Cholesky, no library calls.
Vec cholesky_solve(const DenseMatrix& A, const Vec& b) {
  const Index n = A.rows();
  DenseMatrix L = DenseMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = A(j, j);
    for (Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    L(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  Vec y(n), x(n);
  for (Index i = 0; i < n; ++i) {
    double s = b[i];
    for (Index k = 0; k < i; ++k) s -= L(i, k) * y[k];
    y[i] = s / L(i, i);
  }
  for (Index i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (Index k = i + 1; k < n; ++k) s -= L(k, i) * x[k];
    x[i] = s / L(i, i);
  }
  return x;
}

double cofactor_det(const DenseMatrix& A) {
  const Index n = A.rows();
  if (n == 1) return A(0, 0);
  double det = 0.0;
  for (Index j = 0; j < n; ++j) {
    DenseMatrix minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r)
      for (Index c = 0, cc = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = A(r, c);
    det += ((j % 2) ? -1.0 : 1.0) * A(0, j) * cofactor_det(minor);
  }
  return det;
}

DenseMatrix adjugate_inverse(const DenseMatrix& A) {
  const Index n = A.rows();
  const double det = cofactor_det(A);
  DenseMatrix inv(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      DenseMatrix minor(n - 1, n - 1);
      for (Index r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Index c = 0, cc = 0; c < n; ++c)
          if (c != j) minor(rr, cc++) = A(r, c);
        ++rr;
      }
      inv(j, i) = (((i + j) % 2) ? -1.0 : 1.0) * cofactor_det(minor) / det;
    }
  return inv;
}

}  // namespace

TEST_CASE("thin_svd: identity and rank one") {
  const ThinSvd s = thin_svd(DenseMatrix::Identity(3, 3));
  CHECK((s.sigma - Vec::Ones(3)).norm() < 1e-15);

  Vec u(4), v(3);
  u << 2.0, 0.0, 0.0, 0.0;
  v << 0.0, 3.0, 0.0;
  const ThinSvd r = thin_svd(u * v.transpose());
  CHECK(r.sigma[0] == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(r.sigma[1] < 1e-14);
  CHECK(r.sigma[2] < 1e-14);
}

TEST_CASE("thin_svd: random 50x10 against eigen-decomposition and Gram-Schmidt") {
  const DenseMatrix M = random_matrix(50, 10, 7);
  const ThinSvd s = thin_svd(M);
  CHECK(s.U.cols() == 10);
  CHECK((s.U.transpose() * s.U - DenseMatrix::Identity(10, 10)).norm() < 1e-12);
  CHECK((s.U * s.sigma.asDiagonal() * s.V.transpose() - M).norm() <= 1e-10 * M.norm());
  for (Index i = 1; i < 10; ++i) CHECK(s.sigma[i] <= s.sigma[i - 1]);

  // Oracle: eigenvalues of M^T M, left vectors by normalizing M v.
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(M.transpose() * M);
  for (Index i = 0; i < 10; ++i) {
    const double lam = eig.eigenvalues()[9 - i];
    CHECK(s.sigma[i] == doctest::Approx(std::sqrt(lam)).epsilon(1e-10));
    Vec ui = M * eig.eigenvectors().col(9 - i);
    ui /= ui.norm();
    CHECK(std::abs(std::abs(ui.dot(s.U.col(i))) - 1.0) < 1e-9);
  }
  // Sign convention: the largest-magnitude entry of each column is positive.
  for (Index i = 0; i < 10; ++i) {
    Index imax;
    s.U.col(i).cwiseAbs().maxCoeff(&imax);
    CHECK(s.U(imax, i) > 0.0);
  }
}

TEST_CASE("thin_svd: non-finite input is rejected") {
  DenseMatrix M = DenseMatrix::Ones(3, 2);
  M(1, 1) = std::nan("");
  CHECK_THROWS_AS(thin_svd(M), NumericsError);
}

TEST_CASE("sparse_solve: trivial systems") {
  const Vec b = Vec::LinSpaced(5, 1.0, 5.0);
  CHECK((sparse_solve(to_sparse(DenseMatrix::Identity(5, 5)), b) - b).norm() == 0.0);
  DenseMatrix D(2, 2);
  D << 2.0, 0.0, 0.0, 4.0;
  Vec rhs(2);
  rhs << 2.0, 8.0;
  const Vec x = sparse_solve(to_sparse(D), rhs);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
}

TEST_CASE("sparse_solve: random SPD 100x100 against hand Cholesky") {
  const DenseMatrix B = random_matrix(100, 100, 11);
  DenseMatrix A = B * B.transpose() + 100.0 * DenseMatrix::Identity(100, 100);
  const Vec b = random_matrix(100, 1, 12).col(0);
  const Vec x = sparse_solve(to_sparse(A), b);
  const Vec ref = cholesky_solve(A, b);
  CHECK((x - ref).norm() <= 1e-9 * ref.norm());
  CHECK((A * x - b).norm() <= 1e-10 * (A.norm() * x.norm() + b.norm()));
}

TEST_CASE("sparse factorization: singular matrix reports the pivot") {
  DenseMatrix A = DenseMatrix::Identity(4, 4);
  A(2, 2) = 0.0;
  SparseFactor f;
  try {
    f.factorize(to_sparse(A));
    FAIL("expected SingularSystemError");
  } catch (const SingularSystemError& e) {
    CHECK(e.pivot() >= 0);
    CHECK(std::abs(e.pivot_value()) < 1e-12);
  }
}

TEST_CASE("sparse factorization: refactorization on the same pattern") {
  DenseMatrix A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  SparseFactor f;
  f.factorize(to_sparse(A));
  const Vec b = Vec::Ones(3);
  const Vec x1 = f.solve(b);
  f.factorize(to_sparse(2.0 * A));
  const Vec x2 = f.solve(b);
  CHECK((x1 - 2.0 * x2).norm() < 1e-14);
}

TEST_CASE("dense_solve: identity, scaling and adjugate oracle") {
  const DenseMatrix B = random_matrix(4, 2, 3);
  CHECK((dense_solve(DenseMatrix::Identity(4, 4), B) - B).norm() == 0.0);
  CHECK((dense_solve(2.0 * DenseMatrix::Identity(4, 4), B) - 0.5 * B).norm() < 1e-15);

  for (int k = 2; k <= 8; ++k) {
    const DenseMatrix A = random_matrix(k, k, 100 + k) + 3.0 * DenseMatrix::Identity(k, k);
    const DenseMatrix rhs = random_matrix(k, 3, 200 + k);
    const DenseMatrix X = dense_solve(A, rhs);
    const DenseMatrix ref = adjugate_inverse(A) * rhs;
    CHECK((X - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("dense_solve: singular selection matrix") {
  DenseMatrix A(2, 2);
  A << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(dense_solve(A, DenseMatrix::Identity(2, 2)), DegenerateSelectionError);
}

TEST_CASE("SNP1 round trip is bitwise") {
  const DenseMatrix M = random_matrix(7, 5, 99);
  std::stringstream ss;
  write_snp1(ss, M);
  const std::string bytes = ss.str();
  CHECK(bytes.size() == 4 + 4 + 4 + 7 * 5 * 8);
  CHECK(bytes.substr(0, 4) == "SNP1");
  const DenseMatrix R = read_snp1(ss);
  CHECK(R.rows() == 7);
  CHECK(R.cols() == 5);
  CHECK(std::memcmp(R.data(), M.data(), sizeof(double) * 35) == 0);
}

TEST_CASE("SNP1 rejects bad input") {
  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS(read_snp1(bad), NumericsError);
  std::stringstream ss;
  write_snp1(ss, DenseMatrix::Ones(3, 3));
  std::string cut = ss.str().substr(0, 20);
  std::stringstream truncated(cut);
  CHECK_THROWS_AS(read_snp1(truncated), NumericsError);
}
