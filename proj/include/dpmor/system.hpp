#pragma once

#include "dpmor/numerics.hpp"

#include <cstddef>
#include <vector>

namespace dpmor {

/// Selected rows of a sparse matrix in compressed-row form.
struct RowBlock {
  std::vector<Index> row_ptr;  // size rows+1
  std::vector<Index> cols;     // sorted within a row
  std::vector<double> vals;

  Index rows() const { return row_ptr.empty() ? 0 : static_cast<Index>(row_ptr.size()) - 1; }
  /// this * B for a dense B with as many rows as the full matrix has columns.
  DenseMatrix times(const DenseMatrix& B) const;
  DenseMatrix to_dense(Index ncols) const;
};

/// A discretized nonlinear problem on its free unknowns: internal force
/// R(x) balancing lambda * P0. Trial state from evaluate() becomes history
/// only on commit().
class Model {
public:
  virtual ~Model() = default;
  virtual Index size() const = 0;
  virtual const Vec& reference_load() const = 0;
  virtual void evaluate(const Vec& x, double lambda, Vec& R, SparseMatrix& K) = 0;
  /// Internal force and stiffness rows at the listed free indices only.
  virtual void evaluate_rows(const Vec& x, double lambda, const std::vector<Index>& rows, Vec& R, RowBlock& K) = 0;
  virtual void commit() = 0;
  /// Tangent at x = 0 for the virgin state; does not touch the history.
  virtual SparseMatrix linear_stiffness() = 0;
  virtual double monitor_u(const Vec& x, double lambda) const = 0;
  virtual double monitor_p(double lambda) const = 0;
  /// Elements evaluated by the most recent evaluate/evaluate_rows call.
  virtual std::size_t last_evaluated_elements() const { return 0; }
  /// Elements adjacent to the given rows (what evaluate_rows will touch).
  virtual std::vector<int> row_support(const std::vector<Index>& rows) const {
    (void)rows;
    return {};
  }
};

/// What the continuation drivers iterate on: either the full model or a
/// Galerkin-projected one.
class DiscreteSystem {
public:
  virtual ~DiscreteSystem() = default;
  virtual Index size() const = 0;
  virtual const Vec& reference_load() const = 0;
  /// Evaluates the internal force at (x, lambda) and factorizes the tangent.
  virtual void linearize(const Vec& x, double lambda) = 0;
  virtual const Vec& internal_force() const = 0;
  virtual Vec solve(const Vec& b) const = 0;
  virtual void commit() = 0;
  /// Unknowns of the full model corresponding to x.
  virtual Vec full_state(const Vec& x) const = 0;
  virtual double monitor_u(const Vec& x, double lambda) const = 0;
  virtual double monitor_p(double lambda) const = 0;
  virtual std::size_t last_evaluated_elements() const { return 0; }
};

/// The full-order model with a sparse direct solver.
class FullSystem : public DiscreteSystem {
public:
  explicit FullSystem(Model& model) : model_(model) {}
  Index size() const override { return model_.size(); }
  const Vec& reference_load() const override { return model_.reference_load(); }
  void linearize(const Vec& x, double lambda) override;
  const Vec& internal_force() const override { return R_; }
  Vec solve(const Vec& b) const override { return factor_.solve(b); }
  void commit() override { model_.commit(); }
  Vec full_state(const Vec& x) const override { return x; }
  double monitor_u(const Vec& x, double lambda) const override { return model_.monitor_u(x, lambda); }
  double monitor_p(double lambda) const override { return model_.monitor_p(lambda); }
  std::size_t last_evaluated_elements() const override { return model_.last_evaluated_elements(); }
  const SparseMatrix& tangent() const { return K_; }

private:
  Model& model_;
  Vec R_;
  SparseMatrix K_;
  numerics::SparseFactor factor_;
};

}  // namespace dpmor
