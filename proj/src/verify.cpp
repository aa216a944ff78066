#include "dpmor/verify.hpp"

#include "dpmor/fem.hpp"
#include "dpmor/hex8.hpp"
#include "dpmor/mor.hpp"
#include "dpmor/solver.hpp"
#include "dpmor/truss.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace dpmor::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

CheckResult make(const std::string& family, double value, double limit, std::string detail, Clock::time_point t0,
                 bool extra_ok = true) {
  CheckResult r;
  r.family = family;
  r.value = value;
  r.limit = limit;
  r.pass = extra_ok && std::isfinite(value) && value <= limit;
  r.detail = std::move(detail);
  r.seconds = seconds_since(t0);
  return r;
}

MaterialParams elastic_params() {
  MaterialParams p = MaterialParams::plate();
  p.sigma0 = 1e12;
  p.Y0 = 1e12;
  return p;
}

Mesh single_element(const Eigen::Matrix3d& A) {
  Mesh m;
  for (const auto& xi : hex8::kNodeXi) {
    const Eigen::Vector3d y(0.5 * (xi[0] + 1.0), 0.5 * (xi[1] + 1.0), 0.5 * (xi[2] + 1.0));
    m.nodes.push_back(A * y);
  }
  m.elements.push_back({0, 1, 2, 3, 4, 5, 6, 7});
  return m;
}

// Small FE problem used by the reduction checks: 3x3x1 block, clamped at
// x = 0 and pulled at x = 3.
std::unique_ptr<FemModel> block_problem(const MaterialParams& params, double force) {
  Mesh mesh = gen_box({3.0, 3.0, 1.0, 3, 3, 1});
  mesh.node_sets["point_A"] = {nearest_node(mesh, Point3(3.0, 3.0, 1.0))};
  std::vector<Dirichlet> bc;
  for (int c = 0; c < 3; ++c)
    for (const auto& d : fix_component(mesh, "x0", c)) bc.push_back(d);
  DofMap dofs(mesh.num_nodes(), bc);
  return std::make_unique<FemModel>(mesh, std::move(dofs), params, LoadSpec{"x1", Eigen::Vector3d(force, 0, 0)},
                                    MonitorSpec{"point_A", 0});
}

struct Snapshots {
  PathResult path;
  DenseMatrix U, F;
};

Snapshots capture(Model& model, const ControlSpec& ctl) {
  const SparseMatrix K_lin = model.linear_stiffness();
  FullSystem sys(model);
  std::vector<Vec> us, fs;
  Snapshots s;
  s.path = run_path(sys, ctl, [&](const PathPoint& pt, DiscreteSystem& d) {
    us.push_back(pt.x);
    fs.push_back(d.internal_force() - K_lin * pt.x);
  });
  s.U.resize(model.size(), static_cast<Index>(us.size()));
  s.F.resize(model.size(), static_cast<Index>(fs.size()));
  for (std::size_t i = 0; i < us.size(); ++i) {
    s.U.col(static_cast<Index>(i)) = us[i];
    s.F.col(static_cast<Index>(i)) = fs[i];
  }
  return s;
}

// Textbook DEIM written independently of mor.cpp: full-pivot LU for the
// interpolation coefficients, first maximal entry wins.
std::vector<Index> reference_deim(const DenseMatrix& U) {
  std::vector<Index> p;
  Index i0;
  U.col(0).cwiseAbs().maxCoeff(&i0);
  p.push_back(i0);
  for (Index l = 1; l < U.cols(); ++l) {
    DenseMatrix PU(l, l);
    Vec Pu(l);
    for (Index a = 0; a < l; ++a) {
      PU.row(a) = U.row(p[static_cast<std::size_t>(a)]).head(l);
      Pu[a] = U(p[static_cast<std::size_t>(a)], l);
    }
    const Vec c = PU.fullPivLu().solve(Pu);
    const Vec r = U.col(l) - U.leftCols(l) * c;
    Index il;
    r.cwiseAbs().maxCoeff(&il);
    p.push_back(il);
  }
  return p;
}

}  // namespace

CheckResult partition_of_unity(std::uint64_t seed, int samples) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto sh = hex8::shape_functions(Eigen::Vector3d(u(rng), u(rng), u(rng)));
    worst = std::max(worst, std::abs(sh.N.sum() - 1.0));
    worst = std::max(worst, sh.dN.colwise().sum().cwiseAbs().maxCoeff());
  }
  return make("partition_of_unity", worst, 1e-14, std::to_string(samples) + " random points", t0);
}

CheckResult quadrature_volume() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  double worst = 0.0;
  {
    PlateSpec s;
    const double exact = (0.25 * s.width * s.height - 0.25 * std::numbers::pi * s.radius * s.radius) * s.thickness;
    const double e = std::abs(quadrature_volume(gen_plate_with_hole(s)) - exact) / exact;
    d << "plate " << e;
    worst = std::max(worst, e);
  }
  {
    NotchedSpec s;
    const double exact = (s.width * s.height - std::numbers::pi * s.notch_radius * s.notch_radius) * s.thickness;
    const double e = std::abs(quadrature_volume(gen_asym_notched(s)) - exact) / exact;
    d << ", notched " << e;
    worst = std::max(worst, e);
  }
  {
    const double e = std::abs(quadrature_volume(gen_box({2.0, 3.0, 0.5, 2, 3, 1})) - 3.0) / 3.0;
    d << ", box " << e;
    worst = std::max(worst, e);
  }
  return make("quadrature_volume", worst, 5e-3, d.str(), t0);
}

CheckResult patch_test() {
  const auto t0 = Clock::now();
  Eigen::Matrix3d A;
  A << 2.0, 0.3, 0.1, 0.2, 1.5, -0.2, 0.0, 0.1, 1.2;
  const Mesh mesh = single_element(A);
  const ElementGeometry geo = element_geometry(mesh, 0);
  Eigen::Matrix3d H;
  H << 0.004, -0.001, 0.002, 0.0015, -0.002, 0.001, -0.0005, 0.001, 0.003;
  Vec24 u;
  for (int a = 0; a < 8; ++a) u.segment<3>(3 * a) = H * mesh.nodes[static_cast<std::size_t>(a)];
  const MaterialParams p = elastic_params();
  ElementStates old{}, upd{};
  const ElementKernelOut out = element_kernel(geo, u, hex8::Vec8::Zero(), old, p, upd, 0);

  const Eigen::Matrix3d F = Eigen::Matrix3d::Identity() + H;
  const Eigen::Matrix3d P = F * stress(F.transpose() * F, GpState{}, p);
  // Integral of grad N_a over the parallelepiped, from the divergence theorem.
  const Eigen::Matrix3d AinvT = A.inverse().transpose();
  double err = 0.0, ref = 0.0;
  for (int a = 0; a < 8; ++a) {
    Eigen::Vector3d g;
    for (int c = 0; c < 3; ++c) g[c] = 0.25 * hex8::kNodeXi[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
    const Eigen::Vector3d expected = P * (A.determinant() * AinvT * g);
    err = std::max(err, (out.r_u.segment<3>(3 * a) - expected).cwiseAbs().maxCoeff());
    ref = std::max(ref, expected.cwiseAbs().maxCoeff());
  }
  err = std::max(err / ref, out.r_dbar.cwiseAbs().maxCoeff());
  return make("patch_test", err, 1e-10, "skewed hexahedron, affine displacement", t0);
}

CheckResult material_kkt(const MaterialParams& p, const std::string& label, int histories, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double sp = p.sigma0, sd = std::max(p.Y0, 1.0);
  double worst = 0.0;
  int updates = 0, failures = 0, plastic = 0, damage = 0, saturated = 0;
  std::string first_failure;
  for (int h = 0; h < histories; ++h) {
    Eigen::Matrix3d drift;
    for (int i = 0; i < 9; ++i) drift(i / 3, i % 3) = u(rng);
    drift *= 1.5e-3 * u01(rng);
    const double step = 1e-3 * (0.5 + u01(rng));
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    double Dbar = 0.0;
    GpState st;
    for (int t = 0; t < 25; ++t) {
      Eigen::Matrix3d dF;
      for (int i = 0; i < 9; ++i) dF(i / 3, i % 3) = step * u(rng);
      F += drift + dF;
      Dbar = std::clamp(Dbar + 0.02 * (u01(rng) - 0.3), 0.0, 0.95);
      const Eigen::Matrix3d C = F.transpose() * F;
      GpUpdate up;
      try {
        up = gp_update(st, C, Dbar, p);
      } catch (const MaterialError& ex) {
        if (failures++ == 0) first_failure = ex.what();
        break;
      }
      ++updates;
      const double phi_p = yield_function(C, up.state, p) / sp;
      const double phi_d = damage_function(C, up.state, Dbar, p) / sd;
      double v = std::max(phi_p, 0.0);
      if (!up.info.saturated) v = std::max(v, phi_d);
      v = std::max(v, std::max(-up.info.dlambda_p, -up.info.dlambda_d));
      v = std::max(v, std::abs(up.info.dlambda_p * phi_p));
      if (!up.info.saturated) v = std::max(v, std::abs(up.info.dlambda_d * phi_d));
      worst = std::max(worst, v);
      plastic += up.info.plastic;
      damage += up.info.damage;
      saturated += up.info.saturated;
      st = up.state;
    }
  }
  std::ostringstream d;
  d << label << ": " << updates << " updates (" << plastic << " plastic, " << damage << " damage, " << saturated
    << " capped), " << failures << " non-converged";
  if (failures) d << " [" << first_failure << "]";
  return make("material_kkt_" + label, worst, 1e-8, d.str(), t0, failures == 0);
}

CheckResult element_tangent(std::uint64_t seed, int samples) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const MaterialParams p = MaterialParams::plate();
  double worst = 0.0;
  int plastic_gps = 0, damage_gps = 0;
  for (int s = 0; s < samples; ++s) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) += 0.15 * u(rng);
    Mesh mesh = single_element(A);
    for (auto& x : mesh.nodes) x += 0.05 * Eigen::Vector3d(u(rng), u(rng), u(rng));
    const ElementGeometry geo = element_geometry(mesh, 0);

    Eigen::Matrix3d G;
    for (int i = 0; i < 9; ++i) G(i / 3, i % 3) = 0.006 * u(rng);
    Vec24 u1, u2;
    hex8::Vec8 d1, d2;
    for (int a = 0; a < 8; ++a) {
      u1.segment<3>(3 * a) = G * mesh.nodes[static_cast<std::size_t>(a)];
      d1[a] = 0.05 * u01(rng);
    }
    // History from a first load step, then a further random increment.
    ElementStates virgin{}, hist{}, trial{};
    element_kernel(geo, u1, d1, virgin, p, hist, 0);
    for (int i = 0; i < 24; ++i) u2[i] = 1.5 * u1[i] + 5e-4 * u(rng);
    for (int a = 0; a < 8; ++a) d2[a] = d1[a] + 0.02 * u01(rng);
    const ElementKernelOut base = element_kernel(geo, u2, d2, hist, p, trial, 0);
    for (const auto& g : trial) {
      plastic_gps += g.xi_p > 0.0;
      damage_gps += g.D > 0.0;
    }
    const Mat32 K = base.stiffness();
    Mat32 Kfd;
    for (int j = 0; j < 32; ++j) {
      const int a = j / 4, c = j % 4;
      const double h = 1e-7;
      Vec24 up = u2, um = u2;
      hex8::Vec8 dp = d2, dm = d2;
      if (c < 3) {
        up[3 * a + c] += h;
        um[3 * a + c] -= h;
      } else {
        dp[a] += h;
        dm[a] -= h;
      }
      ElementStates tmp{};
      const Vec32 rp = element_kernel(geo, up, dp, hist, p, tmp, 0).residual();
      const Vec32 rm = element_kernel(geo, um, dm, hist, p, tmp, 0).residual();
      Kfd.col(j) = (rp - rm) / (2.0 * h);
    }
    // Relative error per coupling block (u-u, u-Dbar, Dbar-u, Dbar-Dbar).
    for (int bi = 0; bi < 2; ++bi)
      for (int bj = 0; bj < 2; ++bj) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 32; ++i)
          for (int j = 0; j < 32; ++j)
            if (((i % 4) == 3) == (bi == 1) && ((j % 4) == 3) == (bj == 1)) {
              num += (K(i, j) - Kfd(i, j)) * (K(i, j) - Kfd(i, j));
              den += Kfd(i, j) * Kfd(i, j);
            }
        if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
      }
  }
  std::ostringstream d;
  d << samples << " elements, " << plastic_gps << " plastic and " << damage_gps << " damaged Gauss points";
  return make("element_tangent", worst, 1e-4, d.str(), t0);
}

CheckResult global_tangent(std::uint64_t seed, int states, double eps) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Mesh mesh = gen_box({3.0, 3.0, 1.0, 3, 3, 1});
  std::vector<Dirichlet> bc = fix_component(mesh, "x0", 0);
  for (const auto& d : fix_component(mesh, "y0", 1)) bc.push_back(d);
  for (const auto& d : fix_component(mesh, "z0", 2)) bc.push_back(d);
  const DofMap dofs(mesh.num_nodes(), bc);
  const MaterialParams p = MaterialParams::plate();
  double worst = 0.0, worst_abs = 0.0;
  int plastic_gps = 0, damage_gps = 0;
  for (int s = 0; s < states; ++s) {
    Assembler as(mesh, dofs, p);
    Eigen::Matrix3d G;
    for (int i = 0; i < 9; ++i) G(i / 3, i % 3) = 0.004 * u(rng);
    auto field = [&](double scale, double noise, double dbar) {
      Vec U = Vec::Zero(dofs.ndofs());
      for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
        const Eigen::Vector3d v = scale * (G * mesh.nodes[n]);
        for (int c = 0; c < 3; ++c) U[DofMap::dof(static_cast<int>(n), c)] = v[c] + noise * u(rng);
        U[DofMap::dof(static_cast<int>(n), 3)] = dbar * u01(rng);
      }
      return dofs.expand(dofs.restrict_free(U), 0.0);
    };
    // Admissible history state, committed; then the check point beyond it.
    Vec R;
    SparseMatrix K;
    as.assemble(field(1.0, 1e-4, 0.05), R, K);
    as.commit();
    const Vec U = field(1.6, 2e-4, 0.1);
    as.assemble(U, R, K);
    Vec v(dofs.nfree());
    for (Index i = 0; i < v.size(); ++i) v[i] = u(rng);
    v /= v.norm();
    const Vec G0 = dofs.restrict_free(R);
    const Vec Kv = K * v;
    Vec Up = U;
    for (Index i = 0; i < v.size(); ++i) Up[dofs.free_dofs()[static_cast<std::size_t>(i)]] += eps * v[i];
    Vec Rp;
    SparseMatrix Kp;
    as.assemble(Up, Rp, Kp);
    const double abs_err = (dofs.restrict_free(Rp) - G0 - eps * Kv).norm() / (eps * v.norm());
    worst_abs = std::max(worst_abs, abs_err);
    worst = std::max(worst, abs_err * v.norm() / Kv.norm());
    for (const auto& es : as.states())
      for (const auto& g : es) {
        plastic_gps += g.xi_p > 0.0;
        damage_gps += g.D > 0.0;
      }
  }
  std::ostringstream d;
  d << states << " states on a 3x3x1 mesh, eps=" << eps << "; committed histories had " << plastic_gps
    << " plastic and " << damage_gps << " damaged Gauss points; unnormalized " << worst_abs << " N/mm";
  return make("global_tangent", worst, 1e-3, d.str(), t0);
}

CheckResult deim_oracle(std::uint64_t seed, int matrices, int rows, int cols, int kmax) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  int mismatches = 0, comparisons = 0;
  for (int s = 0; s < matrices; ++s) {
    DenseMatrix Om(rows, cols);
    for (Index i = 0; i < Om.size(); ++i) Om.data()[i] = n01(rng);
    for (int k = 1; k <= kmax; ++k) {
      const DenseMatrix O = Om.leftCols(k);
      ++comparisons;
      if (deim_indices(O) != reference_deim(O)) ++mismatches;
    }
  }
  return make("deim_oracle", mismatches, 0.0,
              std::to_string(comparisons) + " index sequences, " + std::to_string(mismatches) + " mismatches", t0);
}

CheckResult deim_exactness(std::uint64_t seed, int states) {
  const auto t0 = Clock::now();
  MaterialParams p = MaterialParams::plate();
  p.Y0 = 1e12;
  const auto owner = block_problem(p, 1500.0);
  FemModel& model = *owner;
  ControlSpec ctl;
  ctl.type = ControlType::Load;
  ctl.steps = 10;
  ctl.dlambda0 = 0.1;
  Snapshots snaps = capture(model, ctl);
  if (!snaps.path.completed) return make("deim_exactness", INFINITY, 1e-10, "training run failed", t0);
  const ForceModes fm = force_modes(snaps.F);
  const Index k = std::min<Index>(numerical_rank(fm.sigma), 8);
  const Index m = numerical_rank(numerics::thin_svd(snaps.U).sigma);
  const PodBasis basis = pod_build(snaps.U, m);
  const SparseMatrix K_lin = model.linear_stiffness();
  const DeimOperators ops = deim_build(fm, k, basis, K_lin, &model);
  RomSystem rom(model, basis, ops);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0, scale = 0.0;
  for (int s = 0; s < states; ++s) {
    model.assembler().reset_states();
    const Index a = static_cast<Index>(u01(rng) * snaps.U.cols()) % snaps.U.cols();
    const Index b = static_cast<Index>(u01(rng) * snaps.U.cols()) % snaps.U.cols();
    const Vec U = u01(rng) * snaps.U.col(a) + 0.5 * u01(rng) * snaps.U.col(b);
    const Vec x = basis.Phi.transpose() * U;
    const double lambda = 0.0;
    Vec RZ;
    RowBlock KZ;
    model.evaluate_rows(basis.Phi * x, lambda, ops.Z, RZ, KZ);
    const Vec nl = RZ - ops.K_linZ_Phi * x;
    const Vec approx = rom.interpolate(nl);
    for (Index i = 0; i < k; ++i) worst = std::max(worst, std::abs(approx[ops.Z[static_cast<std::size_t>(i)]] - nl[i]));
    scale = std::max(scale, nl.cwiseAbs().maxCoeff());
  }
  std::ostringstream d;
  d << states << " reduced states, m=" << m << ", k=" << k << ", max |R_nl[Z]|=" << scale;
  return make("deim_exactness", worst, 1e-10, d.str(), t0);
}

CheckResult arc_length_truss() {
  const auto t0 = Clock::now();
  const VonMisesTrussGeometry g;
  const auto [w1, w2] = g.limit_points();
  std::ostringstream d;
  double eq_err = 0.0;
  double orth = 0.0, pred = 0.0;
  bool traversed = true;
  int halvings = 0;

  // Single truss: w is the only unknown.
  {
    VonMisesTruss truss(g);
    FullSystem sys(truss);
    ControlSpec ctl;
    ctl.type = ControlType::ArcLength;
    ctl.steps = 60;
    ctl.ds0 = 0.05;
    ctl.dlambda0 = 0.05;
    ctl.solver.tol_residual = 1e-12;
    const PathResult path = run_path(sys, ctl);
    double wmax = 0.0;
    for (const auto& pt : path.points) {
      eq_err = std::max(eq_err, std::abs(g.force(pt.x[0]) / g.load - pt.lambda));
      wmax = std::max(wmax, pt.x[0]);
    }
    traversed = traversed && path.completed && wmax > w2;
    orth = std::max(orth, path.max_orthogonality);
    pred = std::max(pred, path.max_predictor_error);
    halvings += path.total_halvings;
    d << "truss: " << path.points.size() << " points, w_max=" << wmax;
  }
  // Truss in series with two springs: snap-back in the loaded DOF.
  {
    const double k1 = 1.2, k2 = 2.0;
    TrussChain chain(g, k1, k2);
    FullSystem sys(chain);
    ControlSpec ctl;
    ctl.type = ControlType::ArcLength;
    ctl.steps = 150;
    ctl.ds0 = 0.05;
    ctl.dlambda0 = 0.05;
    ctl.solver.tol_residual = 1e-12;
    const PathResult path = run_path(sys, ctl);
    double wmax = 0.0;
    bool snap_back = false;
    for (std::size_t i = 0; i < path.points.size(); ++i) {
      const auto& pt = path.points[i];
      const double f = pt.lambda * g.load;
      eq_err = std::max({eq_err, std::abs(g.force(pt.x[0]) - f) / g.load, std::abs(pt.x[1] - pt.x[0] - f / k1),
                         std::abs(pt.x[2] - pt.x[1] - f / k2)});
      wmax = std::max(wmax, pt.x[0]);
      if (i > 0 && pt.x[2] < path.points[i - 1].x[2] && pt.lambda < path.points[i - 1].lambda) snap_back = true;
    }
    traversed = traversed && path.completed && wmax > w2 && snap_back;
    orth = std::max(orth, path.max_orthogonality);
    pred = std::max(pred, path.max_predictor_error);
    halvings += path.total_halvings;
    d << "; chain: " << path.points.size() << " points, w_max=" << wmax << (snap_back ? ", snap-back traced" : "");
  }
  d << "; equilibrium error " << eq_err << ", orthogonality " << orth << ", predictor error " << pred
    << ", halvings " << halvings;
  CheckResult r = make("arc_length_truss", eq_err, 1e-8, d.str(), t0, traversed && halvings == 0);
  r.pass = r.pass && orth <= 1e-12 && pred <= 1e-12;
  return r;
}

CheckResult load_control_fails() {
  const auto t0 = Clock::now();
  const VonMisesTrussGeometry g;
  const auto [w1, w2] = g.limit_points();
  const double lam_max = g.force(w1) / g.load;
  VonMisesTruss truss(g);
  FullSystem sys(truss);
  ControlSpec ctl;
  ctl.type = ControlType::Load;
  ctl.steps = 12;
  ctl.retry_halvings = 4;
  for (int t = 1; t <= ctl.steps; ++t) ctl.lambdas.push_back(1.2 * lam_max * t / ctl.steps);
  const PathResult path = run_path(sys, ctl);
  bool on_unstable = false, jumped = false;
  for (const auto& pt : path.points) {
    if (pt.x[0] > w1 + 1e-9 && pt.x[0] < w2 - 1e-9) on_unstable = true;
    if (pt.x[0] >= w2) jumped = true;
  }
  const bool failed = !path.completed || jumped;
  std::ostringstream d;
  d << "lambda_max=" << lam_max << "; load control " << (path.completed ? "completed" : "stopped") << " after "
    << path.points.size() << " points" << (jumped ? ", jumped to the remote branch" : "")
    << (on_unstable ? ", visited the unstable branch" : "");
  if (!path.completed) d << " (" << path.failure.substr(0, 80) << ")";
  return make("load_control_fails", failed && !on_unstable ? 0.0 : 1.0, 0.0, d.str(), t0);
}

CheckResult exact_reduction_chain() {
  const auto t0 = Clock::now();
  TrussChain chain;
  ControlSpec ctl;
  ctl.type = ControlType::ArcLength;
  ctl.steps = 120;
  ctl.ds0 = 0.05;
  ctl.dlambda0 = 0.05;
  ctl.solver.tol_residual = 1e-12;
  const Snapshots snaps = capture(chain, ctl);
  const Index m = numerical_rank(numerics::thin_svd(snaps.U).sigma);
  const ForceModes fm = force_modes(snaps.F);
  const Index k = numerical_rank(fm.sigma);
  const PodBasis basis = pod_build(snaps.U, m);
  const DeimOperators ops = deim_build(fm, k, basis, chain.linear_stiffness(), &chain);
  RomSystem rom(chain, basis, ops);
  const PathResult rp = run_path(rom, ctl);
  double worst = rp.points.size() == snaps.path.points.size() ? 0.0 : INFINITY;
  for (std::size_t t = 0; t < std::min(rp.points.size(), snaps.path.points.size()); ++t) {
    const Vec& U = snaps.path.points[t].x;
    worst = std::max(worst, (basis.Phi * rp.points[t].x - U).norm() / U.norm());
  }
  std::ostringstream d;
  d << "m=" << m << ", k=" << k << ", " << rp.points.size() << " reduced points";
  return make("exact_reduction_chain", worst, 1e-6, d.str(), t0);
}

std::vector<CheckResult> run_all(std::uint64_t seed, bool full) {
  std::vector<CheckResult> out;
  out.push_back(partition_of_unity(seed, full ? 1000 : 100));
  out.push_back(quadrature_volume());
  out.push_back(patch_test());
  out.push_back(material_kkt(MaterialParams::plate(), "plate", full ? 500 : 40, seed + 1));
  out.push_back(material_kkt(MaterialParams::notched(), "notched", full ? 500 : 40, seed + 2));
  out.push_back(element_tangent(seed + 3, full ? 10 : 2));
  out.push_back(global_tangent(seed + 4, full ? 20 : 3));
  out.push_back(deim_oracle(seed + 5, full ? 20 : 5));
  out.push_back(deim_exactness(seed + 6, full ? 100 : 10));
  out.push_back(arc_length_truss());
  out.push_back(load_control_fails());
  out.push_back(exact_reduction_chain());
  return out;
}

std::string to_json(const std::vector<CheckResult>& results) {
  nlohmann::json j = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    j.push_back({{"family", r.family},
                 {"pass", r.pass},
                 {"value", r.value},
                 {"limit", r.limit},
                 {"detail", r.detail},
                 {"seconds", r.seconds}});
    all = all && r.pass;
  }
  return nlohmann::json{{"pass", all}, {"checks", j}}.dump(2);
}

}  // namespace dpmor::verify
