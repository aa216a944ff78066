#include "dpmor/mor.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace dpmor {

using nlohmann::json;

Index numerical_rank(const Vec& sigma, double rel_tol) {
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) return 0;
  Index r = 0;
  while (r < sigma.size() && sigma[r] > rel_tol * sigma[0]) ++r;
  return r;
}

PodBasis PodBasis::truncated(Index m_new) const {
  if (m_new < 1 || m_new > m) throw MorError("POD truncation out of range");
  PodBasis b;
  b.Phi = Phi.leftCols(m_new);
  b.sigma = sigma;
  b.m = m_new;
  return b;
}

PodBasis pod_build(const DenseMatrix& snapshots, Index m) {
  const Index limit = std::min(snapshots.rows(), snapshots.cols());
  if (m < 1 || m > limit)
    throw MorError("pod_build: m=" + std::to_string(m) + " outside [1, " + std::to_string(limit) + "]");
  const numerics::ThinSvd svd = numerics::thin_svd(snapshots);
  PodBasis b;
  b.Phi = svd.U.leftCols(m);
  b.sigma = svd.sigma;
  b.m = m;
  return b;
}

std::vector<Index> deim_indices(const DenseMatrix& Omega) {
  const Index n = Omega.rows(), k = Omega.cols();
  if (k < 1 || k > n) throw MorError("deim_indices: need 1 <= k <= n");
  auto argmax_abs = [](const Vec& v) {
    Index best = 0;
    double bv = std::abs(v[0]);
    for (Index i = 1; i < v.size(); ++i)
      if (std::abs(v[i]) > bv) {
        bv = std::abs(v[i]);
        best = i;
      }
    return std::make_pair(best, bv);
  };
  std::vector<Index> Z;
  auto [g0, v0] = argmax_abs(Omega.col(0));
  if (!(v0 > 0.0)) throw InsufficientRankError("insufficient nonlinear rank: first mode is zero", 0);
  Z.push_back(g0);
  for (Index i = 1; i < k; ++i) {
    DenseMatrix A(i, i);
    Vec rhs(i);
    for (Index a = 0; a < i; ++a) {
      for (Index b = 0; b < i; ++b) A(a, b) = Omega(Z[static_cast<std::size_t>(a)], b);
      rhs[a] = Omega(Z[static_cast<std::size_t>(a)], i);
    }
    Vec c;
    try {
      c = numerics::dense_solve(A, rhs);
    } catch (const DegenerateSelectionError&) {
      throw InsufficientRankError("insufficient nonlinear rank: achievable k = " + std::to_string(i), i);
    }
    const Vec res = Omega.col(i) - Omega.leftCols(i) * c;
    auto [g, v] = argmax_abs(res);
    if (!(v > kRankTolerance * Omega.col(i).cwiseAbs().maxCoeff()))
      throw InsufficientRankError("insufficient nonlinear rank: achievable k = " + std::to_string(i), i);
    Z.push_back(g);
  }
  return Z;
}

ForceModes force_modes(const DenseMatrix& force_snapshots) {
  const numerics::ThinSvd svd = numerics::thin_svd(force_snapshots);
  return {svd.U, svd.sigma};
}

DeimOperators deim_build(const ForceModes& modes, Index k, const PodBasis& basis, const SparseMatrix& K_lin,
                         const Model* support) {
  const Index rank = numerical_rank(modes.sigma);
  if (k < 1) throw MorError("deim_build: k must be >= 1");
  if (k > rank)
    throw InsufficientRankError("insufficient nonlinear rank: requested k = " + std::to_string(k) +
                                    ", achievable k = " + std::to_string(rank),
                                rank);
  if (basis.Phi.rows() != modes.Omega.rows() || K_lin.rows() != basis.Phi.rows())
    throw MorError("deim_build: dimension mismatch between basis, force modes and K_lin");

  DeimOperators ops;
  ops.Omega = modes.Omega.leftCols(k);
  ops.Z = deim_indices(ops.Omega);
  DenseMatrix ZtO(k, k);
  for (Index a = 0; a < k; ++a) ZtO.row(a) = ops.Omega.row(ops.Z[static_cast<std::size_t>(a)]);
  const DenseMatrix PhiT_O = basis.Phi.transpose() * ops.Omega;
  // M^T = (Z^T Omega)^{-T} (Phi^T Omega)^T
  ops.M_deim = numerics::dense_solve(ZtO.transpose(), PhiT_O.transpose()).transpose();
  const Eigen::JacobiSVD<DenseMatrix> s(ZtO);
  ops.cond_ZtOmega = s.singularValues()[0] / s.singularValues()[k - 1];

  ops.K_lin_red = basis.Phi.transpose() * (K_lin * basis.Phi);
  const Eigen::SparseMatrix<double, Eigen::RowMajor, int> Kr = K_lin;
  ops.K_linZ_Phi.resize(k, basis.m);
  for (Index a = 0; a < k; ++a) ops.K_linZ_Phi.row(a) = Kr.row(ops.Z[static_cast<std::size_t>(a)]) * basis.Phi;
  if (support) ops.elem_subset = support->row_support(ops.Z);
  return ops;
}

DeimOperators deim_build(const DenseMatrix& force_snapshots, Index k, const PodBasis& basis,
                         const SparseMatrix& K_lin, const Model* support) {
  return deim_build(force_modes(force_snapshots), k, basis, K_lin, support);
}

RomSystem::RomSystem(Model& model, const PodBasis& basis, const DeimOperators& ops)
    : model_(model), basis_(basis), ops_(ops) {
  if (basis.Phi.rows() != model.size()) throw MorError("ROM: basis does not match the model size");
  if (ops.M_deim.rows() != basis.m) throw MorError("ROM: DEIM operators built for a different basis");
  P0_red_ = basis.Phi.transpose() * model.reference_load();
  const Index k = static_cast<Index>(ops.Z.size());
  DenseMatrix ZtO(k, k);
  for (Index a = 0; a < k; ++a) ZtO.row(a) = ops.Omega.row(ops.Z[static_cast<std::size_t>(a)]);
  omega_solve_ = numerics::dense_solve(ZtO.transpose(), ops.Omega.transpose()).transpose();
}

void RomSystem::linearize(const Vec& x, double lambda) {
  const Vec U = basis_.Phi * x;
  Vec RZ;
  RowBlock KZ;
  model_.evaluate_rows(U, lambda, ops_.Z, RZ, KZ);
  const Vec nl = RZ - ops_.K_linZ_Phi * x;
  R_red_ = ops_.K_lin_red * x + ops_.M_deim * nl;
  K_red_ = ops_.K_lin_red + ops_.M_deim * (KZ.times(basis_.Phi) - ops_.K_linZ_Phi);
  try {
    factor_.factorize(K_red_);
  } catch (const DegenerateSelectionError& ex) {
    throw SingularSystemError(-1, 0.0, std::string("singular reduced tangent: ") + ex.what());
  }
}

double RomSystem::monitor_u(const Vec& x, double lambda) const { return model_.monitor_u(basis_.Phi * x, lambda); }

Vec RomSystem::interpolate(const Vec& values_at_Z) const { return omega_solve_ * values_at_Z; }

// --- artifacts -----------------------------------------------------------------

namespace {

void write_manifest(const std::filesystem::path& dir, json j, const Provenance& prov) {
  j["mesh_hash"] = prov.mesh_hash;
  j["params_hash"] = prov.params_hash;
  j["training_hash"] = prov.training_hash;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw MorError("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

json read_manifest(const std::filesystem::path& dir, Provenance* prov) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw MorError("missing manifest.json in " + dir.string());
  json j = json::parse(in);
  if (prov) {
    prov->mesh_hash = j.value("mesh_hash", "");
    prov->params_hash = j.value("params_hash", "");
    prov->training_hash = j.value("training_hash", "");
  }
  return j;
}

DenseMatrix as_column(const Vec& v) { return DenseMatrix(v); }

}  // namespace

void save_pod(const std::filesystem::path& dir, const PodBasis& basis, const Provenance& prov) {
  std::filesystem::create_directories(dir);
  numerics::write_snp1(dir / "phi.snp1", basis.Phi);
  numerics::write_snp1(dir / "sigma.snp1", as_column(basis.sigma));
  write_manifest(dir, {{"kind", "pod"}, {"m", basis.m}, {"n", basis.Phi.rows()}}, prov);
}

PodBasis load_pod(const std::filesystem::path& dir, Provenance* prov) {
  const json j = read_manifest(dir, prov);
  if (j.value("kind", "") != "pod") throw MorError(dir.string() + " is not a POD artifact");
  PodBasis b;
  b.Phi = numerics::read_snp1(dir / "phi.snp1");
  b.sigma = numerics::read_snp1(dir / "sigma.snp1").col(0);
  b.m = b.Phi.cols();
  return b;
}

void save_force_modes(const std::filesystem::path& dir, const ForceModes& modes, const Provenance& prov) {
  std::filesystem::create_directories(dir);
  numerics::write_snp1(dir / "omega.snp1", modes.Omega);
  numerics::write_snp1(dir / "sigma.snp1", as_column(modes.sigma));
  write_manifest(dir,
                 {{"kind", "force_modes"}, {"k_max", modes.Omega.cols()}, {"rank", numerical_rank(modes.sigma)}},
                 prov);
}

ForceModes load_force_modes(const std::filesystem::path& dir, Provenance* prov) {
  const json j = read_manifest(dir, prov);
  if (j.value("kind", "") != "force_modes") throw MorError(dir.string() + " is not a force-mode artifact");
  return {numerics::read_snp1(dir / "omega.snp1"), numerics::read_snp1(dir / "sigma.snp1").col(0)};
}

void save_deim(const std::filesystem::path& dir, const DeimOperators& ops, const Provenance& prov) {
  std::filesystem::create_directories(dir);
  numerics::write_snp1(dir / "omega.snp1", ops.Omega);
  numerics::write_snp1(dir / "m_deim.snp1", ops.M_deim);
  numerics::write_snp1(dir / "k_lin_red.snp1", ops.K_lin_red);
  numerics::write_snp1(dir / "k_linz_phi.snp1", ops.K_linZ_Phi);
  write_manifest(dir,
                 {{"kind", "deim"},
                  {"k", ops.Z.size()},
                  {"Z_idx", ops.Z},
                  {"elem_subset", ops.elem_subset},
                  {"cond_ZtOmega", ops.cond_ZtOmega}},
                 prov);
}

DeimOperators load_deim(const std::filesystem::path& dir, Provenance* prov) {
  const json j = read_manifest(dir, prov);
  if (j.value("kind", "") != "deim") throw MorError(dir.string() + " is not a DEIM artifact");
  DeimOperators ops;
  ops.Omega = numerics::read_snp1(dir / "omega.snp1");
  ops.M_deim = numerics::read_snp1(dir / "m_deim.snp1");
  ops.K_lin_red = numerics::read_snp1(dir / "k_lin_red.snp1");
  ops.K_linZ_Phi = numerics::read_snp1(dir / "k_linz_phi.snp1");
  ops.Z = j.at("Z_idx").get<std::vector<Index>>();
  ops.elem_subset = j.at("elem_subset").get<std::vector<int>>();
  ops.cond_ZtOmega = j.value("cond_ZtOmega", 0.0);
  return ops;
}

}  // namespace dpmor
