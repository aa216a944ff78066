#pragma once

#include "dpmor/system.hpp"

namespace dpmor {

/// Shallow two-bar (von Mises) truss. w is the downward apex deflection and
/// the load acts downward at the apex.
struct VonMisesTrussGeometry {
  double half_span = 10.0;  // a
  double rise = 1.0;        // h
  double EA = 1000.0;
  double load = 1.0;  // |P0|

  double force(double w) const;      // internal force R(w)
  double stiffness(double w) const;  // dR/dw
  /// Deflections of the two limit points (R' = 0), ascending.
  std::pair<double, double> limit_points() const;
};

class VonMisesTruss : public Model {
public:
  explicit VonMisesTruss(VonMisesTrussGeometry g = {});
  Index size() const override { return 1; }
  const Vec& reference_load() const override { return P0_; }
  void evaluate(const Vec& x, double lambda, Vec& R, SparseMatrix& K) override;
  void evaluate_rows(const Vec& x, double lambda, const std::vector<Index>& rows, Vec& R, RowBlock& K) override;
  void commit() override {}
  SparseMatrix linear_stiffness() override;
  double monitor_u(const Vec& x, double) const override { return x[0]; }
  double monitor_p(double lambda) const override { return lambda * g_.load; }
  const VonMisesTrussGeometry& geometry() const { return g_; }

private:
  VonMisesTrussGeometry g_;
  Vec P0_;
};

/// The truss apex in series with two linear springs; the load acts on the
/// far end. Only the first equation is nonlinear, and every equilibrium
/// state lies in a two-dimensional subspace.
class TrussChain : public Model {
public:
  TrussChain(VonMisesTrussGeometry g = {}, double k1 = 1.2, double k2 = 2.0);
  Index size() const override { return 3; }
  const Vec& reference_load() const override { return P0_; }
  void evaluate(const Vec& x, double lambda, Vec& R, SparseMatrix& K) override;
  void evaluate_rows(const Vec& x, double lambda, const std::vector<Index>& rows, Vec& R, RowBlock& K) override;
  void commit() override {}
  SparseMatrix linear_stiffness() override;
  double monitor_u(const Vec& x, double) const override { return x[2]; }
  double monitor_p(double lambda) const override { return lambda * g_.load; }
  std::size_t last_evaluated_elements() const override { return last_; }
  std::vector<int> row_support(const std::vector<Index>& rows) const override;

private:
  DenseMatrix tangent(const Vec& x) const;
  Vec internal(const Vec& x) const;
  VonMisesTrussGeometry g_;
  double k1_, k2_;
  Vec P0_;
  std::size_t last_ = 0;
};

}  // namespace dpmor
