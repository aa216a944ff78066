#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace dpmor {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericsError : public Error {
public:
  using Error::Error;
};

/// Raised when a factorization meets a pivot below the singularity threshold.
class SingularSystemError : public NumericsError {
public:
  SingularSystemError(Index pivot, double value, const std::string& what)
      : NumericsError(what), pivot_(pivot), value_(value) {}
  Index pivot() const noexcept { return pivot_; }
  double pivot_value() const noexcept { return value_; }

private:
  Index pivot_;
  double value_;
};

/// Dense factorization of the small DEIM interpolation matrix failed.
class DegenerateSelectionError : public NumericsError {
public:
  using NumericsError::NumericsError;
};

namespace numerics {

struct ThinSvd {
  DenseMatrix U;  // rows x min(rows, cols), orthonormal columns
  Vec sigma;      // nonincreasing
  DenseMatrix V;  // cols x min(rows, cols)
};

/// Thin singular value decomposition. Columns of U are sign-normalized so that
/// the entry of largest magnitude is positive, which makes bases reproducible.
ThinSvd thin_svd(const DenseMatrix& M);

bool all_finite(const DenseMatrix& M);

/// Relative pivot threshold used by all factorizations.
inline constexpr double kPivotThreshold = 1e-14;

/// Sparse LU factorization with an explicit pivot check. Factor once, solve
/// many times; not shareable across threads.
class SparseFactor {
public:
  SparseFactor();
  ~SparseFactor();
  SparseFactor(SparseFactor&&) noexcept;
  SparseFactor& operator=(SparseFactor&&) noexcept;

  /// Throws SingularSystemError carrying the offending pivot column.
  void factorize(const SparseMatrix& A);
  Vec solve(const Vec& b) const;
  Index size() const noexcept { return n_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index n_ = 0;
  bool pattern_ready_ = false;
};

Vec sparse_solve(const SparseMatrix& A, const Vec& b);

/// Dense LU for the small reduced systems.
class DenseFactor {
public:
  void factorize(const DenseMatrix& A);
  Vec solve(const Vec& b) const;
  DenseMatrix solve(const DenseMatrix& B) const;
  double rcond_estimate() const noexcept { return rcond_; }

private:
  Eigen::PartialPivLU<DenseMatrix> lu_;
  double rcond_ = 0.0;
};

/// Solves A X = B for a small square A. Throws DegenerateSelectionError when A
/// is numerically singular.
DenseMatrix dense_solve(const DenseMatrix& A, const DenseMatrix& B);

double max_abs(const SparseMatrix& A);

// SNP1 block: "SNP1", u32 rows, u32 cols, rows*cols little-endian f64, column-major.
void write_snp1(const std::filesystem::path& path, const DenseMatrix& M);
DenseMatrix read_snp1(const std::filesystem::path& path);
void write_snp1(std::ostream& out, const DenseMatrix& M);
DenseMatrix read_snp1(std::istream& in);

}  // namespace numerics
}  // namespace dpmor
