#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpmor/fem.hpp"
#include "dpmor/mor.hpp"
#include "dpmor/solver.hpp"
#include "dpmor/truss.hpp"
#include "dpmor/verify.hpp"

#include <cstring>
#include <random>

using namespace dpmor;

namespace {

DenseMatrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  DenseMatrix M(r, c);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = n(rng);
  return M;
}

DenseMatrix random_orthogonal(Index n, std::uint64_t seed) {
  Eigen::HouseholderQR<DenseMatrix> qr(random_matrix(n, n, seed));
  return qr.householderQ() * DenseMatrix::Identity(n, n);
}

ForceModes full_modes(Index n, std::uint64_t seed) {
  return {random_orthogonal(n, seed), Vec::Ones(n)};
}

PodBasis full_basis(Index n, std::uint64_t seed) {
  PodBasis b;
  b.Phi = random_orthogonal(n, seed);
  b.sigma = Vec::Ones(n);
  b.m = n;
  return b;
}

}  // namespace

TEST_CASE("pod: repeated column gives a rank one basis") {
  Vec v(5);
  v << 1.0, -2.0, 0.5, 3.0, 0.0;
  DenseMatrix S(5, 4);
  for (int c = 0; c < 4; ++c) S.col(c) = v;
  const PodBasis b = pod_build(S, 1);
  CHECK(std::abs(std::abs(b.Phi.col(0).dot(v / v.norm())) - 1.0) < 1e-14);
  CHECK(b.sigma[1] <= 1e-14 * b.sigma[0]);
  CHECK(numerical_rank(b.sigma) == 1);
  CHECK_THROWS_AS(pod_build(S, 0), MorError);
  CHECK_THROWS_AS(pod_build(S, 5), MorError);
}

TEST_CASE("pod: m = l reproduces every snapshot; energies match thin_svd") {
  const DenseMatrix S = random_matrix(30, 6, 21);
  const PodBasis b = pod_build(S, 6);
  for (Index c = 0; c < 6; ++c) {
    const Vec u = S.col(c);
    CHECK((b.Phi * (b.Phi.transpose() * u) - u).norm() <= 1e-10 * u.norm());
  }
  const numerics::ThinSvd ref = numerics::thin_svd(S);
  CHECK((b.sigma - ref.sigma).norm() <= 1e-14 * ref.sigma.norm());
  const PodBasis t = b.truncated(3);
  CHECK(t.m == 3);
  CHECK(t.Phi.cols() == 3);
  CHECK((t.Phi - b.Phi.leftCols(3)).norm() == 0.0);
}

TEST_CASE("deim indices: hand cases") {
  DenseMatrix w(3, 1);
  w << 0.1, 0.9, 0.3;
  CHECK(deim_indices(w) == std::vector<Index>{1});
  CHECK(deim_indices(DenseMatrix::Identity(4, 2)) == std::vector<Index>{0, 1});
  // Ties go to the smallest index.
  DenseMatrix tie(3, 1);
  tie << 0.5, -0.5, 0.5;
  CHECK(deim_indices(tie) == std::vector<Index>{0});
}

TEST_CASE("deim indices: independent re-implementation agrees") {
  const verify::CheckResult r = verify::deim_oracle(5, 20);
  CHECK_MESSAGE(r.pass, r.detail);
}

TEST_CASE("deim: rank deficiency is reported with the achievable k") {
  DenseMatrix Omega(4, 2);
  Omega << 1, 2, 0, 0, 0, 0, 0, 0;  // second column dependent on the first
  try {
    deim_indices(Omega);
    FAIL("expected InsufficientRankError");
  } catch (const InsufficientRankError& e) {
    CHECK(e.achievable() == 1);
  }
  TrussChain chain;
  const SparseMatrix K = chain.linear_stiffness();
  ForceModes modes{DenseMatrix::Identity(3, 3), Vec(3)};
  modes.sigma << 1.0, 1e-3, 0.0;
  try {
    deim_build(modes, 3, full_basis(3, 1), K);
    FAIL("expected InsufficientRankError");
  } catch (const InsufficientRankError& e) {
    CHECK(e.achievable() == 2);
  }
}

TEST_CASE("reduced system: full basis and k = n gives the Galerkin projection") {
  const Mesh mesh = gen_box({2.0, 1.0, 1.0, 2, 1, 1});
  std::vector<Dirichlet> bc;
  for (int c = 0; c < 3; ++c) {
    const auto f = fix_component(mesh, "x0", c);
    bc.insert(bc.end(), f.begin(), f.end());
  }
  Mesh m2 = mesh;
  m2.node_sets["mon"] = {nearest_node(mesh, Point3(2.0, 1.0, 1.0))};
  FemModel model(m2, DofMap(mesh.num_nodes(), bc), MaterialParams::plate(),
                 LoadSpec{"x1", Eigen::Vector3d(50.0, 0.0, 0.0)}, MonitorSpec{"mon", 0});
  const Index n = model.size();
  const SparseMatrix Klin = model.linear_stiffness();
  const PodBasis basis = full_basis(n, 3);
  const DeimOperators ops = deim_build(full_modes(n, 4), n, basis, Klin, &model);
  CHECK(ops.elem_subset.size() == mesh.num_elements());
  RomSystem rom(model, basis, ops);

  // Zero state.
  rom.linearize(Vec::Zero(n), 0.0);
  CHECK(rom.internal_force().norm() < 1e-8);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = u(rng);
  rom.linearize(x, 0.0);
  Vec R;
  SparseMatrix K;
  model.evaluate(basis.Phi * x, 0.0, R, K);
  const Vec expect = basis.Phi.transpose() * R;
  CHECK((rom.internal_force() - expect).norm() <= 1e-12 * R.norm());
  const DenseMatrix Kred = basis.Phi.transpose() * (K * basis.Phi);
  CHECK((rom.tangent() - Kred).norm() <= 1e-10 * Kred.norm());
}

TEST_CASE("reduced system: interpolation is exact at the selected rows") {
  const verify::CheckResult r = verify::deim_exactness(6, 4);
  CHECK_MESSAGE(r.pass, r.detail);
}

TEST_CASE("reduced solves: exact reduction and zero load") {
  const verify::CheckResult chain = verify::exact_reduction_chain();
  CHECK_MESSAGE(chain.pass, chain.detail);

  TrussChain model;
  const PodBasis basis = full_basis(3, 11);
  const DeimOperators ops = deim_build(full_modes(3, 12), 3, basis, model.linear_stiffness(), &model);
  RomSystem rom(model, basis, ops);
  const NewtonResult z = newton_solve(rom, Vec::Zero(3), 0.0, SolverOptions{});
  CHECK(z.x.norm() == 0.0);

  // Same load level through the full and the reduced Newton.
  FullSystem full(model);
  const NewtonResult a = newton_solve(full, Vec::Zero(3), 0.2, SolverOptions{});
  const NewtonResult b = newton_solve(rom, Vec::Zero(3), 0.2, SolverOptions{});
  CHECK((basis.Phi * b.x - a.x).norm() <= 1e-8 * a.x.norm());
}

TEST_CASE("artifacts: save and load are bitwise") {
  const auto dir = std::filesystem::temp_directory_path() / "dpmor_test_mor";
  std::filesystem::remove_all(dir);
  const PodBasis b = pod_build(random_matrix(12, 5, 31), 3);
  const Provenance prov{"mesh1", "params2", "train3"};
  save_pod(dir / "pod", b, prov);
  Provenance back;
  const PodBasis l = load_pod(dir / "pod", &back);
  CHECK(back.mesh_hash == "mesh1");
  CHECK(back.params_hash == "params2");
  CHECK(back.training_hash == "train3");
  CHECK(l.m == 3);
  REQUIRE(l.Phi.size() == b.Phi.size());
  CHECK(std::memcmp(l.Phi.data(), b.Phi.data(), sizeof(double) * std::size_t(b.Phi.size())) == 0);
  CHECK(std::memcmp(l.sigma.data(), b.sigma.data(), sizeof(double) * std::size_t(b.sigma.size())) == 0);

  const ForceModes fm = force_modes(random_matrix(12, 5, 32));
  save_force_modes(dir / "fm", fm, prov);
  const ForceModes fl = load_force_modes(dir / "fm");
  CHECK((fl.Omega - fm.Omega).norm() == 0.0);

  SparseMatrix K = (DenseMatrix::Identity(12, 12) * 3.0).sparseView();
  const DeimOperators ops = deim_build(fm, 4, b, K);
  save_deim(dir / "deim", ops, prov);
  const DeimOperators ol = load_deim(dir / "deim");
  CHECK(ol.Z == ops.Z);
  CHECK((ol.M_deim - ops.M_deim).norm() == 0.0);
  CHECK((ol.K_lin_red - ops.K_lin_red).norm() == 0.0);

  CHECK_THROWS_AS(load_pod(dir / "deim"), MorError);
  std::filesystem::remove_all(dir);
}
