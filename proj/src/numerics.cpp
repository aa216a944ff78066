#include "dpmor/numerics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace dpmor::numerics {

bool all_finite(const DenseMatrix& M) { return M.allFinite(); }

ThinSvd thin_svd(const DenseMatrix& M) {
  if (M.cols() < 1 || M.rows() < 1) throw NumericsError("thin_svd: empty matrix");
  if (!M.allFinite()) throw NumericsError("thin_svd: matrix contains non-finite entries");

  Eigen::BDCSVD<DenseMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};

  // Eigen already sorts singular values; a stable pass keeps equal values in
  // the order the decomposition produced them.
  const Index k = out.sigma.size();
  std::vector<Index> order(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return out.sigma[a] > out.sigma[b]; });
  ThinSvd sorted{DenseMatrix(out.U.rows(), k), Vec(k), DenseMatrix(out.V.rows(), k)};
  for (Index i = 0; i < k; ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    sorted.U.col(i) = out.U.col(j);
    sorted.V.col(i) = out.V.col(j);
    sorted.sigma[i] = out.sigma[j];
  }

  for (Index c = 0; c < k; ++c) {
    Index imax = 0;
    sorted.U.col(c).cwiseAbs().maxCoeff(&imax);
    if (sorted.U(imax, c) < 0.0) {
      sorted.U.col(c) *= -1.0;
      sorted.V.col(c) *= -1.0;
    }
  }
  return sorted;
}

double max_abs(const SparseMatrix& A) {
  double m = 0.0;
  for (Index k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

namespace {

// SparseLU keeps the diagonal of U inside the supernodal L storage; expose it
// so the smallest pivot can be checked against the threshold.
class CheckedSparseLU : public Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> {
public:
  std::pair<Index, double> smallest_pivot() const {
    Index where = -1;
    double smallest = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < this->cols(); ++j) {
      double diag = 0.0;
      for (SCMatrix::InnerIterator it(m_Lstore, j); it; ++it) {
        if (it.index() == j) {
          diag = std::abs(it.value());
          break;
        }
      }
      if (diag < smallest) {
        smallest = diag;
        where = j;
      }
    }
    return {where, smallest};
  }
};

}  // namespace

struct SparseFactor::Impl {
  CheckedSparseLU lu;
  std::vector<int> outer, inner;
};

SparseFactor::SparseFactor() : impl_(std::make_unique<Impl>()) {}
SparseFactor::~SparseFactor() = default;
SparseFactor::SparseFactor(SparseFactor&&) noexcept = default;
SparseFactor& SparseFactor::operator=(SparseFactor&&) noexcept = default;

void SparseFactor::factorize(const SparseMatrix& A) {
  if (A.rows() != A.cols()) throw NumericsError("sparse factorization: matrix is not square");
  if (!A.isCompressed()) throw NumericsError("sparse factorization: matrix must be compressed");
  n_ = A.rows();
  if (n_ == 0) return;

  const bool same_pattern =
      pattern_ready_ && static_cast<Index>(impl_->outer.size()) == A.outerSize() + 1 &&
      static_cast<Index>(impl_->inner.size()) == A.nonZeros() &&
      std::equal(impl_->outer.begin(), impl_->outer.end(), A.outerIndexPtr()) &&
      std::equal(impl_->inner.begin(), impl_->inner.end(), A.innerIndexPtr());
  if (!same_pattern) {
    impl_->lu.analyzePattern(A);
    impl_->outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
    impl_->inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
    pattern_ready_ = true;
  }
  impl_->lu.factorize(A);
  const double scale = max_abs(A);
  if (impl_->lu.info() != Eigen::Success) {
    pattern_ready_ = false;
    // SparseLU names the offending column at the end of its message.
    const std::string msg = impl_->lu.lastErrorMessage();
    Index where = -1;
    const auto digits = msg.find_last_not_of("0123456789");
    if (digits != std::string::npos && digits + 1 < msg.size()) where = std::stol(msg.substr(digits + 1));
    throw SingularSystemError(where, 0.0, "singular system: " + msg);
  }
  const auto [where, value] = impl_->lu.smallest_pivot();
  if (!(value > kPivotThreshold * scale)) {
    std::ostringstream msg;
    msg << "singular system: pivot " << where << " has magnitude " << value
        << " (threshold " << kPivotThreshold * scale << ")";
    throw SingularSystemError(where, value, msg.str());
  }
}

Vec SparseFactor::solve(const Vec& b) const {
  if (b.size() != n_) throw NumericsError("sparse solve: dimension mismatch");
  if (n_ == 0) return Vec();
  Vec x = impl_->lu.solve(b);
  return x;
}

Vec sparse_solve(const SparseMatrix& A, const Vec& b) {
  if (A.rows() != b.size()) throw NumericsError("sparse_solve: dimension mismatch");
  SparseFactor f;
  f.factorize(A);
  return f.solve(b);
}

void DenseFactor::factorize(const DenseMatrix& A) {
  if (A.rows() != A.cols()) throw NumericsError("dense factorization: matrix is not square");
  if (A.size() == 0) throw DegenerateSelectionError("dense factorization: empty matrix");
  lu_.compute(A);
  const double scale = A.cwiseAbs().maxCoeff();
  const auto& LU = lu_.matrixLU();
  double smallest = std::numeric_limits<double>::infinity();
  Index where = 0;
  for (Index i = 0; i < LU.rows(); ++i) {
    if (std::abs(LU(i, i)) < smallest) {
      smallest = std::abs(LU(i, i));
      where = i;
    }
  }
  if (!(smallest > kPivotThreshold * scale) || !A.allFinite()) {
    std::ostringstream msg;
    msg << "DEIM selection degenerate: pivot " << where << " has magnitude " << smallest;
    throw DegenerateSelectionError(msg.str());
  }
  rcond_ = lu_.rcond();
}

Vec DenseFactor::solve(const Vec& b) const { return lu_.solve(b); }
DenseMatrix DenseFactor::solve(const DenseMatrix& B) const { return lu_.solve(B); }

DenseMatrix dense_solve(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.rows() != B.rows()) throw NumericsError("dense_solve: dimension mismatch");
  DenseFactor f;
  f.factorize(A);
  DenseMatrix X = f.solve(B);
  // One step of iterative refinement keeps the residual at roundoff level for
  // moderately conditioned interpolation matrices.
  X += f.solve(DenseMatrix(B - A * X));
  return X;
}

namespace {

static_assert(std::endian::native == std::endian::little, "SNP1 IO assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw NumericsError("SNP1: truncated stream");
  return v;
}

}  // namespace

void write_snp1(std::ostream& out, const DenseMatrix& M) {
  out.write("SNP1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(M.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(M.cols()));
  // Eigen's default storage is column-major, matching the file layout.
  out.write(reinterpret_cast<const char*>(M.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.size())));
}

DenseMatrix read_snp1(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::memcmp(magic.data(), "SNP1", 4) != 0) throw NumericsError("SNP1: bad magic bytes");
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  DenseMatrix M(rows, cols);
  in.read(reinterpret_cast<char*>(M.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.size())));
  if (!in) throw NumericsError("SNP1: truncated payload");
  return M;
}

void write_snp1(const std::filesystem::path& path, const DenseMatrix& M) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericsError("SNP1: cannot open " + path.string() + " for writing");
  write_snp1(out, M);
}

DenseMatrix read_snp1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericsError("SNP1: cannot open " + path.string());
  return read_snp1(in);
}

}  // namespace dpmor::numerics
