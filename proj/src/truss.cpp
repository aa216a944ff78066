#include "dpmor/truss.hpp"

#include <algorithm>
#include <cmath>

namespace dpmor {

double VonMisesTrussGeometry::force(double w) const {
  const double y = rise - w;
  const double L = std::hypot(half_span, y), L0 = std::hypot(half_span, rise);
  return -2.0 * EA * (L - L0) / L0 * y / L;
}

double VonMisesTrussGeometry::stiffness(double w) const {
  const double y = rise - w;
  const double L = std::hypot(half_span, y), L0 = std::hypot(half_span, rise);
  return 2.0 * EA / L0 * (1.0 - L0 * half_span * half_span / (L * L * L));
}

std::pair<double, double> VonMisesTrussGeometry::limit_points() const {
  const double L0 = std::hypot(half_span, rise);
  const double L = std::cbrt(L0 * half_span * half_span);
  const double y = std::sqrt(std::max(L * L - half_span * half_span, 0.0));
  return {rise - y, rise + y};
}

namespace {

SparseMatrix from_dense(const DenseMatrix& A) {
  // Keep every entry so the sparsity pattern never changes.
  std::vector<Eigen::Triplet<double, int>> t;
  for (int j = 0; j < A.cols(); ++j)
    for (int i = 0; i < A.rows(); ++i) t.emplace_back(i, j, A(i, j));
  SparseMatrix S(A.rows(), A.cols());
  S.setFromTriplets(t.begin(), t.end());
  S.makeCompressed();
  return S;
}

void dense_rows(const DenseMatrix& K, const std::vector<Index>& rows, RowBlock& out) {
  out.row_ptr.assign(1, 0);
  out.cols.clear();
  out.vals.clear();
  for (Index r : rows) {
    for (Index c = 0; c < K.cols(); ++c) {
      out.cols.push_back(c);
      out.vals.push_back(K(r, c));
    }
    out.row_ptr.push_back(static_cast<Index>(out.cols.size()));
  }
}

}  // namespace

VonMisesTruss::VonMisesTruss(VonMisesTrussGeometry g) : g_(g), P0_(Vec::Constant(1, g.load)) {}

void VonMisesTruss::evaluate(const Vec& x, double, Vec& R, SparseMatrix& K) {
  R = Vec::Constant(1, g_.force(x[0]));
  K = from_dense(DenseMatrix::Constant(1, 1, g_.stiffness(x[0])));
}

void VonMisesTruss::evaluate_rows(const Vec& x, double, const std::vector<Index>& rows, Vec& R, RowBlock& K) {
  R = Vec::Constant(static_cast<Index>(rows.size()), g_.force(x[0]));
  dense_rows(DenseMatrix::Constant(1, 1, g_.stiffness(x[0])), rows, K);
}

SparseMatrix VonMisesTruss::linear_stiffness() { return from_dense(DenseMatrix::Constant(1, 1, g_.stiffness(0.0))); }

TrussChain::TrussChain(VonMisesTrussGeometry g, double k1, double k2) : g_(g), k1_(k1), k2_(k2) {
  P0_ = Vec::Zero(3);
  P0_[2] = g.load;
}

Vec TrussChain::internal(const Vec& x) const {
  Vec R(3);
  R[0] = g_.force(x[0]) + k1_ * (x[0] - x[1]);
  R[1] = k1_ * (x[1] - x[0]) + k2_ * (x[1] - x[2]);
  R[2] = k2_ * (x[2] - x[1]);
  return R;
}

DenseMatrix TrussChain::tangent(const Vec& x) const {
  DenseMatrix K(3, 3);
  K << g_.stiffness(x[0]) + k1_, -k1_, 0.0, -k1_, k1_ + k2_, -k2_, 0.0, -k2_, k2_;
  return K;
}

void TrussChain::evaluate(const Vec& x, double, Vec& R, SparseMatrix& K) {
  R = internal(x);
  K = from_dense(tangent(x));
  last_ = 3;
}

void TrussChain::evaluate_rows(const Vec& x, double, const std::vector<Index>& rows, Vec& R, RowBlock& K) {
  const Vec full = internal(x);
  R.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) R[static_cast<Index>(i)] = full[rows[i]];
  dense_rows(tangent(x), rows, K);
  last_ = row_support(rows).size();
}

SparseMatrix TrussChain::linear_stiffness() { return from_dense(tangent(Vec::Zero(3))); }

std::vector<int> TrussChain::row_support(const std::vector<Index>& rows) const {
  // Members: 0 = truss, 1 = first spring, 2 = second spring.
  std::vector<int> out;
  for (Index r : rows) {
    if (r == 0) out.insert(out.end(), {0, 1});
    if (r == 1) out.insert(out.end(), {1, 2});
    if (r == 2) out.push_back(2);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace dpmor
