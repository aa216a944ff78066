#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpmor/material.hpp"
#include "dpmor/verify.hpp"

#include <cmath>

using namespace dpmor;

namespace {

Mat3 stretch_x(double l) {
  Mat3 C = Mat3::Identity();
  C(0, 0) = l * l;
  return C;
}

MaterialParams plasticity_only(MaterialParams p) {
  p.Y0 = 1e12;
  return p;
}

MaterialParams damage_only(MaterialParams p) {
  p.sigma0 = 1e12;
  return p;
}

Mat3 dev(const Mat3& A) { return A - A.trace() / 3.0 * Mat3::Identity(); }

// Closed-form elasticity tensor of the compressible Neo-Hookean law in
// Voigt form (columns strain-like, shear columns carry 2E).
Mat6 neo_hooke_tangent(const Mat3& C, const MaterialParams& p) {
  const Mat3 Ci = C.inverse();
  const double J2 = C.determinant();
  const int ii[6] = {0, 1, 2, 0, 1, 0}, jj[6] = {0, 1, 2, 1, 2, 2};
  Mat6 T;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const int i = ii[a], j = jj[a], k = ii[b], l = jj[b];
      T(a, b) = p.lambda * J2 * Ci(i, j) * Ci(k, l) +
                (2.0 * p.mu - p.lambda * (J2 - 1.0)) * 0.5 * (Ci(i, k) * Ci(j, l) + Ci(i, l) * Ci(j, k));
    }
  return T;
}

}  // namespace

TEST_CASE("f_dam: values and derivative") {
  const MaterialParams p = MaterialParams::plate();
  CHECK(f_dam(0.0, p) == 1.0);
  CHECK(f_dam(0.5, p) == doctest::Approx(0.25).epsilon(1e-15));
  const double h = 1e-6;
  const double fd = (f_dam(0.3 + h, p) - f_dam(0.3 - h, p)) / (2 * h);
  CHECK(std::abs(fd - f_dam_prime(0.3, p)) < 1e-8);
  CHECK_THROWS_AS(f_dam(1.0, p), FullyDamagedError);
}

TEST_CASE("free energy: undeformed state stores nothing") {
  const MaterialParams p = MaterialParams::plate();
  const Energies E = free_energy(Mat3::Identity(), GpState{}, 0.0, Eigen::Vector3d::Zero(), p);
  CHECK(E.total == doctest::Approx(0.0));
  CHECK(std::abs(E.psi_e) < 1e-12);
  CHECK(std::abs(E.psi_p) < 1e-12);
  CHECK(E.psi_d == 0.0);
  CHECK(E.psi_dbar == 0.0);
}

TEST_CASE("free energy: hardening asymptote and penalty") {
  const MaterialParams p = MaterialParams::plate();
  GpState st;
  st.xi_p = 10.0;
  const Energies E = free_energy(Mat3::Identity(), st, 0.0, Eigen::Vector3d::Zero(), p);
  CHECK(E.psi_p == doctest::Approx(p.e * (10.0 - 1.0 / p.f)).epsilon(1e-12));

  GpState d;
  d.D = 0.01;
  const Energies P = free_energy(Mat3::Identity(), d, 0.0, Eigen::Vector3d::Zero(), p);
  CHECK(P.psi_dbar == doctest::Approx(5.0).epsilon(1e-12));
  const Energies G = free_energy(Mat3::Identity(), GpState{}, 0.0, Eigen::Vector3d(0.1, 0.0, 0.0), p);
  CHECK(G.psi_dbar == doctest::Approx(0.5 * p.A * 0.01).epsilon(1e-12));
}

TEST_CASE("free energy: non-SPD input is rejected") {
  Mat3 C = Mat3::Identity();
  C(2, 2) = -1.0;
  CHECK_THROWS_AS(free_energy(C, GpState{}, 0.0, Eigen::Vector3d::Zero(), MaterialParams::plate()), MaterialError);
}

TEST_CASE("stress: reference state, uniaxial closed form, degradation") {
  const MaterialParams p = MaterialParams::plate();
  CHECK(stress(Mat3::Identity(), GpState{}, p).norm() < 1e-10);

  const Mat3 C = stretch_x(1.001);
  const Mat3 S = stress(C, GpState{}, p);
  const double c = C(0, 0);
  CHECK(S(0, 0) == doctest::Approx(p.mu * (1.0 - 1.0 / c) + 0.5 * p.lambda * (c - 1.0) / c).epsilon(1e-12));
  CHECK(S(1, 1) == doctest::Approx(0.5 * p.lambda * (c - 1.0)).epsilon(1e-12));
  CHECK(S(2, 2) == doctest::Approx(S(1, 1)).epsilon(1e-14));
  CHECK(std::abs(S(0, 1)) + std::abs(S(1, 2)) + std::abs(S(0, 2)) < 1e-12);

  GpState dmg;
  dmg.D = 0.5;
  CHECK((stress(C, dmg, p) - 0.25 * S).norm() <= 1e-15 * S.norm());
}

TEST_CASE("conjugate forces: zero internal variables and saturation") {
  const MaterialParams p = MaterialParams::notched();
  const ConjugateForces z = conjugate_forces(Mat3::Identity(), GpState{}, 0.0, p);
  CHECK(z.q_p == 0.0);
  CHECK(z.q_d == 0.0);
  CHECK(std::abs(z.Y_drive) < 1e-12);
  GpState st;
  st.xi_d = 200.0 / p.s;
  CHECK(std::abs(conjugate_forces(Mat3::Identity(), st, 0.0, p).q_d - p.r) <= 1e-10 * p.r);
}

TEST_CASE("gp_update: elastic trial leaves the state unchanged") {
  const MaterialParams p = MaterialParams::plate();
  const GpUpdate u = gp_update(GpState{}, stretch_x(1.0001), 0.0, p);
  CHECK_FALSE(u.info.plastic);
  CHECK_FALSE(u.info.damage);
  CHECK(u.info.dlambda_p == 0.0);
  CHECK(u.info.dlambda_d == 0.0);
  CHECK(u.state.Cp == Mat3::Identity());
  CHECK(u.state.xi_p == 0.0);
  CHECK(u.state.D == 0.0);
}

TEST_CASE("gp_update: uniaxial stretch past yield against a line-search oracle") {
  const MaterialParams p = plasticity_only(MaterialParams::notched());
  const Mat3 C = stretch_x(1.01);
  const GpUpdate u = gp_update(GpState{}, C, 0.0, p);
  REQUIRE(u.info.plastic);
  CHECK(u.state.xi_p > 0.0);
  CHECK(std::abs(yield_function(C, u.state, p)) <= 1e-8 * p.sigma0);

  // Flow direction at the returned state; the increment of Cp must be t times it.
  const ConjugateForces cf = conjugate_forces(C, u.state, 0.0, p);
  const Mat3 Yd = dev(cf.Y_aux);
  const Mat3 M = Yd * u.state.Cp;
  const Mat3 dir = std::sqrt(6.0) / Yd.norm() * 0.5 * (M + M.transpose());
  const Mat3 dCp = u.state.Cp - Mat3::Identity();
  auto misfit = [&](double t) { return (dCp - t * dir).squaredNorm(); };
  double lo = 0.0, hi = 1.0;
  {
    // Dense scan, then golden section on the bracketing cell.
    const int n = 20000;
    int best = 0;
    for (int i = 1; i <= n; ++i)
      if (misfit(i * hi / n) < misfit(best * hi / n)) best = i;
    lo = std::max(0, best - 1) * 1.0 / n;
    hi = std::min(n, best + 1) * 1.0 / n;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200; ++it) {
      const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      (misfit(a) < misfit(b) ? hi : lo) = (misfit(a) < misfit(b) ? b : a);
    }
  }
  const double t = 0.5 * (lo + hi);
  CHECK(t == doctest::Approx(u.info.dlambda_p).epsilon(1e-6));
  CHECK(u.state.xi_p == doctest::Approx(u.info.dlambda_p).epsilon(1e-12));
}

TEST_CASE("gp_update: damage-only loading against a bisection oracle") {
  const MaterialParams p = damage_only(MaterialParams::notched());
  const Mat3 C = stretch_x(1.01);
  const GpUpdate u = gp_update(GpState{}, C, 0.0, p);
  REQUIRE(u.info.damage);
  CHECK_FALSE(u.info.plastic);
  CHECK(u.state.D > 0.0);
  CHECK(std::abs(damage_function(C, u.state, 0.0, p)) <= 1e-8 * p.Y0);

  // With Cp = I the stored energy is psi_e(C) only.
  const double psi_e = free_energy(C, GpState{}, 0.0, Eigen::Vector3d::Zero(), p).psi_e;
  auto phi = [&](double D) {
    return p.dam_exponent * std::pow(1.0 - D, p.dam_exponent - 1.0) * psi_e - p.H * D -
           (p.Y0 + p.r * (1.0 - std::exp(-p.s * D)));
  };
  double lo = 0.0, hi = 0.5;
  REQUIRE(phi(lo) > 0.0);
  REQUIRE(phi(hi) < 0.0);
  for (int i = 0; i < 200; ++i) (phi(0.5 * (lo + hi)) > 0.0 ? lo : hi) = 0.5 * (lo + hi);
  CHECK(u.state.D == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
  CHECK(u.info.dlambda_d == doctest::Approx(u.state.D).epsilon(1e-12));
}

TEST_CASE("gp_update: re-running from the converged state adds nothing") {
  const MaterialParams p = MaterialParams::notched();
  const Mat3 C = stretch_x(1.02);
  const GpUpdate u = gp_update(GpState{}, C, 0.0, p);
  REQUIRE(u.info.plastic);
  const GpUpdate v = gp_update(u.state, C, 0.0, p);
  CHECK(std::abs(v.info.dlambda_p) < 1e-12);
  CHECK(std::abs(v.info.dlambda_d) < 1e-12);
  CHECK((v.state.Cp - u.state.Cp).norm() < 1e-12);
  CHECK((v.S - u.S).norm() <= 1e-9 * u.S.norm());
}

TEST_CASE("gp_update: rotated deformation gives identical response") {
  const MaterialParams p = MaterialParams::notched();
  Eigen::Matrix3d F;
  F << 1.015, 0.004, 0.0, 0.002, 0.995, 0.001, 0.0, 0.003, 1.0;
  const Eigen::Matrix3d Q = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const Mat3 C1 = F.transpose() * F;
  const Mat3 C2 = (Q * F).transpose() * (Q * F);
  const GpUpdate a = gp_update(GpState{}, C1, 0.0, p);
  const GpUpdate b = gp_update(GpState{}, C2, 0.0, p);
  CHECK((a.S - b.S).norm() <= 1e-8 * a.S.norm());
  CHECK(a.state.xi_p == doctest::Approx(b.state.xi_p).epsilon(1e-8));
  CHECK(a.state.D == doctest::Approx(b.state.D).epsilon(1e-8));
}

TEST_CASE("gp_tangents: elastic tangent equals the Neo-Hookean tensor") {
  const MaterialParams p = MaterialParams::plate();
  Mat3 C;
  C << 1.0004, 0.0001, 0.0, 0.0001, 0.9998, 0.00005, 0.0, 0.00005, 1.0001;
  const GpResult r = gp_tangents(GpState{}, C, 0.0, p);
  REQUIRE_FALSE(r.info.plastic);
  REQUIRE_FALSE(r.info.damage);
  const Mat6 T = neo_hooke_tangent(C, p);
  CHECK((r.response.dS_dE - T).norm() <= 1e-6 * T.norm());
  CHECK(r.response.dD_dDbar == 0.0);
  CHECK(r.response.dD_dE.norm() == 0.0);
}

TEST_CASE("gp_tangents: plastic point, Richardson consistency of differences") {
  const MaterialParams p = plasticity_only(MaterialParams::notched());
  Mat3 C = stretch_x(1.01);
  C(0, 1) = C(1, 0) = 0.002;
  const GpState old{};
  const GpResult r = gp_tangents(old, C, 0.0, p);
  REQUIRE(r.info.plastic);

  const int ii[6] = {0, 1, 2, 0, 1, 0}, jj[6] = {0, 1, 2, 1, 2, 2};
  auto fd_column = [&](int k, double h) {
    Mat3 Cp = C, Cm = C;
    Cp(ii[k], jj[k]) += h;
    Cm(ii[k], jj[k]) -= h;
    if (ii[k] != jj[k]) {
      Cp(jj[k], ii[k]) += h;
      Cm(jj[k], ii[k]) -= h;
    }
    const Vec6 d = voigt_stress(gp_update(old, Cp, 0.0, p).S) - voigt_stress(gp_update(old, Cm, 0.0, p).S);
    return Vec6((k < 3 ? 2.0 : 1.0) / (2.0 * h) * d);
  };
  for (int k = 0; k < 6; ++k) {
    const Vec6 c1 = fd_column(k, 4e-6), c2 = fd_column(k, 2e-6);
    const Vec6 rich = (4.0 * c2 - c1) / 3.0;
    CHECK((c1 - c2).norm() <= 1e-4 * rich.norm());
    CHECK((r.response.dS_dE.col(k) - rich).norm() <= 1e-4 * rich.norm());
  }
}

TEST_CASE("KKT conditions over short random histories") {
  const verify::CheckResult a = verify::material_kkt(MaterialParams::plate(), "plate", 4, 3);
  CHECK_MESSAGE(a.pass, a.detail);
  const verify::CheckResult b = verify::material_kkt(MaterialParams::notched(), "notched", 4, 5);
  CHECK_MESSAGE(b.pass, b.detail);
}

TEST_CASE("parameter validation") {
  MaterialParams p = MaterialParams::plate();
  CHECK_NOTHROW(p.validate());
  p.mu = -1.0;
  CHECK_THROWS_AS(p.validate(), MaterialError);
  CHECK(MaterialParams::plate().internal_length() == doctest::Approx(std::sqrt(50.0 / 1e5)));
}
