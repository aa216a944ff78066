#include "dpmor/system.hpp"

namespace dpmor {

DenseMatrix RowBlock::times(const DenseMatrix& B) const {
  const Index nr = rows();
  DenseMatrix out = DenseMatrix::Zero(nr, B.cols());
  for (Index s = 0; s < nr; ++s)
    for (Index p = row_ptr[static_cast<std::size_t>(s)]; p < row_ptr[static_cast<std::size_t>(s) + 1]; ++p)
      out.row(s) += vals[static_cast<std::size_t>(p)] * B.row(cols[static_cast<std::size_t>(p)]);
  return out;
}

DenseMatrix RowBlock::to_dense(Index ncols) const {
  const Index nr = rows();
  DenseMatrix out = DenseMatrix::Zero(nr, ncols);
  for (Index s = 0; s < nr; ++s)
    for (Index p = row_ptr[static_cast<std::size_t>(s)]; p < row_ptr[static_cast<std::size_t>(s) + 1]; ++p)
      out(s, cols[static_cast<std::size_t>(p)]) += vals[static_cast<std::size_t>(p)];
  return out;
}

void FullSystem::linearize(const Vec& x, double lambda) {
  model_.evaluate(x, lambda, R_, K_);
  factor_.factorize(K_);
}

}  // namespace dpmor
