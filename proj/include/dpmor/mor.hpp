#pragma once

#include "dpmor/system.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dpmor {

class MorError : public Error {
public:
  using Error::Error;
};

/// Fewer independent force modes than requested DEIM indices.
class InsufficientRankError : public MorError {
public:
  InsufficientRankError(const std::string& what, Index achievable) : MorError(what), achievable_(achievable) {}
  Index achievable() const { return achievable_; }

private:
  Index achievable_;
};

/// Relative singular-value cutoff that defines numerical rank.
inline constexpr double kRankTolerance = 1e-10;

Index numerical_rank(const Vec& sigma, double rel_tol = kRankTolerance);

struct PodBasis {
  DenseMatrix Phi;  // n x m, orthonormal columns
  Vec sigma;        // all singular values of the snapshot matrix
  Index m = 0;

  /// First m' <= m columns.
  PodBasis truncated(Index m_new) const;
};

/// POD of raw (uncentred) snapshots, one column per converged step.
PodBasis pod_build(const DenseMatrix& snapshots, Index m);

/// Greedy DEIM point selection on the columns of Omega (0-based indices,
/// ties resolved towards the smallest index).
std::vector<Index> deim_indices(const DenseMatrix& Omega);

struct DeimOperators {
  DenseMatrix Omega;           // n x k
  std::vector<Index> Z;        // k selected free indices
  DenseMatrix M_deim;          // m x k: Phi^T Omega (Z^T Omega)^{-1}
  DenseMatrix K_lin_red;       // m x m
  DenseMatrix K_linZ_Phi;      // k x m: Z^T K_lin Phi
  std::vector<int> elem_subset;
  double cond_ZtOmega = 0.0;
};

/// Left singular vectors of the force snapshots with their singular values.
struct ForceModes {
  DenseMatrix Omega;
  Vec sigma;
};

ForceModes force_modes(const DenseMatrix& force_snapshots);

/// Operators for k DEIM indices. Throws InsufficientRankError when k
/// exceeds the numerical rank of the force snapshots.
DeimOperators deim_build(const ForceModes& modes, Index k, const PodBasis& basis, const SparseMatrix& K_lin,
                         const Model* support = nullptr);
DeimOperators deim_build(const DenseMatrix& force_snapshots, Index k, const PodBasis& basis,
                         const SparseMatrix& K_lin, const Model* support = nullptr);

/// Galerkin projection with DEIM for the nonlinear part of the internal force:
/// R_red = K_lin_red x + M_deim (R(Phi x)[Z] - K_lin[Z] Phi x).
class RomSystem : public DiscreteSystem {
public:
  RomSystem(Model& model, const PodBasis& basis, const DeimOperators& ops);

  Index size() const override { return basis_.m; }
  const Vec& reference_load() const override { return P0_red_; }
  void linearize(const Vec& x, double lambda) override;
  const Vec& internal_force() const override { return R_red_; }
  Vec solve(const Vec& b) const override { return factor_.solve(b); }
  void commit() override { model_.commit(); }
  Vec full_state(const Vec& x) const override { return basis_.Phi * x; }
  double monitor_u(const Vec& x, double lambda) const override;
  double monitor_p(double lambda) const override { return model_.monitor_p(lambda); }
  std::size_t last_evaluated_elements() const override { return model_.last_evaluated_elements(); }

  const DenseMatrix& tangent() const { return K_red_; }
  /// DEIM approximation of the full nonlinear force from its values at Z.
  Vec interpolate(const Vec& values_at_Z) const;

private:
  Model& model_;
  const PodBasis& basis_;
  const DeimOperators& ops_;
  Vec P0_red_, R_red_;
  DenseMatrix K_red_;
  DenseMatrix omega_solve_;  // Omega (Z^T Omega)^{-1}
  numerics::DenseFactor factor_;
};

// --- artifacts ---------------------------------------------------------------

struct Provenance {
  std::string mesh_hash;
  std::string params_hash;
  std::string training_hash;
};

void save_pod(const std::filesystem::path& dir, const PodBasis& basis, const Provenance& prov);
PodBasis load_pod(const std::filesystem::path& dir, Provenance* prov = nullptr);

void save_force_modes(const std::filesystem::path& dir, const ForceModes& modes, const Provenance& prov);
ForceModes load_force_modes(const std::filesystem::path& dir, Provenance* prov = nullptr);

void save_deim(const std::filesystem::path& dir, const DeimOperators& ops, const Provenance& prov);
DeimOperators load_deim(const std::filesystem::path& dir, Provenance* prov = nullptr);

}  // namespace dpmor
