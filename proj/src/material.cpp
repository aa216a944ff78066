#include "dpmor/material.hpp"

#include "dual.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpmor {

using detail::Dual;
using detail::M3;

MaterialParams MaterialParams::plate() {
  MaterialParams p;
  p.lambda = 75000.0;
  p.mu = 140000.0;
  p.sigma0 = 325.0;
  p.a = 2600.0;
  p.b = 12.5;
  p.e = 500.0;
  p.f = 8.0;
  p.Y0 = 10.0;
  p.r = 0.5;
  p.s = 1.0;
  p.A = 50.0;
  p.H = 1e5;
  return p;
}

MaterialParams MaterialParams::notched() {
  MaterialParams p;
  p.lambda = 25000.0;
  p.mu = 55000.0;
  p.sigma0 = 100.0;
  p.a = 62.5;
  p.b = 2.5;
  p.e = 125.0;
  p.f = 5.0;
  p.Y0 = 2.5;
  p.r = 5.0;
  p.s = 100.0;
  p.A = 75.0;
  p.H = 1e5;
  return p;
}

void MaterialParams::validate() const {
  const double vals[] = {lambda, mu, sigma0, a, b, e, f, Y0, r, s, A, H};
  const char* names[] = {"lambda", "mu", "sigma0", "a", "b", "e", "f", "Y0", "r", "s", "A", "H"};
  for (int i = 0; i < 12; ++i)
    if (!(vals[i] > 0.0) || !std::isfinite(vals[i]))
      throw MaterialError(std::string("material parameter ") + names[i] + " must be positive and finite");
  if (!(dam_exponent >= 1.0)) throw MaterialError("dam_exponent must be >= 1");
}

double MaterialParams::internal_length() const { return std::sqrt(A / H); }

double f_dam(double D, const MaterialParams& p) {
  if (D >= 1.0) throw FullyDamagedError("fully damaged: D >= 1");
  return std::pow(1.0 - D, p.dam_exponent);
}

double f_dam_prime(double D, const MaterialParams& p) {
  if (D >= 1.0) throw FullyDamagedError("fully damaged: D >= 1");
  return -p.dam_exponent * std::pow(1.0 - D, p.dam_exponent - 1.0);
}

namespace {

M3<double> to_m3(const Mat3& A) {
  M3<double> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = A(i, j);
  return r;
}

Mat3 to_eigen(const M3<double>& A) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = A(i, j);
  return r;
}

void require_spd(const Mat3& A, const char* what) {
  Eigen::LLT<Mat3> llt(0.5 * (A + A.transpose()));
  if (llt.info() != Eigen::Success || !A.allFinite())
    throw MaterialError(std::string(what) + " is not symmetric positive definite");
}

constexpr double kSqrt32 = 1.224744871391589;  // sqrt(3/2)

struct Kinematics {
  M3<double> C, Cinv;
  double detC;
};

Kinematics kinematics(const Mat3& C) {
  Kinematics k;
  k.C = to_m3(0.5 * (C + C.transpose()));
  k.detC = detail::det(k.C);
  if (!(k.detC > 0.0)) throw MaterialError("C has non-positive determinant");
  k.Cinv = detail::inverse(k.C, k.detC);
  return k;
}

// Everything the local residual needs besides the unknowns.
struct LocalProblem {
  Kinematics kin;
  GpState old;
  double Dbar;
  const MaterialParams* p;
  bool plastic = false;
  bool damage = false;
  bool capped = false;  // damage increment frozen at the cap
};

template <class T>
struct LocalEval {
  std::array<T, 14> R;
  T phi_p, phi_d;
  M3<T> S_eff;  // undamaged stress
  T fd;
};

// Unknowns: Cp (6), Cpi (6), dlambda_p, dlambda_d.
template <class T>
LocalEval<T> local_eval(const std::array<T, 14>& x, const LocalProblem& lp, bool need_flow) {
  const MaterialParams& p = *lp.p;
  const M3<double>& C = lp.kin.C;
  const M3<T> Cp = M3<T>::sym(x, 0);
  const M3<T> Cpi = M3<T>::sym(x, 6);
  const T& dlp = x[12];
  const T& dld = x[13];

  const T D = lp.old.D + dld;
  const T xid = lp.old.xi_d + dld;
  const T omd = 1.0 - D;
  const T fd = detail::pow(omd, p.dam_exponent);
  const T fdp = -p.dam_exponent * detail::pow(omd, p.dam_exponent - 1.0);
  const T xip = lp.old.xi_p + dlp / fd;

  const T detCp = detail::det(Cp);
  const T detCpi = detail::det(Cpi);
  const M3<T> Cpinv = detail::inverse(Cp, detCp);
  const M3<T> Cpiinv = detail::inverse(Cpi, detCpi);
  const T ratio = lp.kin.detC / detCp;
  const T log_ratio = detail::log(ratio);

  M3<T> Cinv_t;
  M3<T> C_t;
  for (int i = 0; i < 9; ++i) {
    Cinv_t.m[i] = lp.kin.Cinv.m[i];
    C_t.m[i] = C.m[i];
  }

  LocalEval<T> out;
  out.fd = fd;
  out.S_eff = p.mu * (Cpinv - Cinv_t) + (0.5 * p.lambda) * (ratio - 1.0) * Cinv_t;

  const T psi_e = 0.5 * p.mu * (detail::trace(C_t * Cpinv) - 3.0 - log_ratio) +
                  0.25 * p.lambda * (ratio - 1.0 - log_ratio);
  const T psi_p = 0.5 * p.a * (detail::trace(Cp * Cpiinv) - 3.0 - detail::log(detCp / detCpi)) +
                  p.e * (xip + (detail::exp(-p.f * xip) - 1.0) / p.f);
  const T y_drive = -fdp * (psi_e + psi_p) - p.H * (D - lp.Dbar);
  out.phi_d = y_drive - (p.Y0 + p.r * (1.0 - detail::exp(-p.s * xid)));

  const M3<T> X_eff = p.a * (Cpiinv - Cpinv);
  const M3<T> Yk_eff = Cp * X_eff;
  const M3<T> Y_eff = C_t * out.S_eff - Yk_eff;
  const M3<T> Yd = detail::deviator(Y_eff);
  const T tsq = detail::trace_square(Yd);
  const T nrm = detail::value(tsq) > 0.0 ? detail::sqrt(tsq) : T(0.0);
  out.phi_p = kSqrt32 * nrm - (p.sigma0 + p.e * (1.0 - detail::exp(-p.f * xip)));

  if (lp.plastic && need_flow) {
    const M3<T> flow_p = detail::symmetric_part(Yd * Cp);
    const M3<T> flow_k = detail::symmetric_part(detail::deviator(Yk_eff) * Cpi);
    const T cp_fac = 2.0 * kSqrt32 * dlp / (fd * nrm);
    const T ck_fac = 2.0 * (p.b / p.a) * dlp;
    const M3<T> rp = Cp - cp_fac * flow_p;
    const M3<T> rk = Cpi - ck_fac * flow_k;
    const int ii[6] = {0, 1, 2, 0, 1, 0}, jj[6] = {0, 1, 2, 1, 2, 2};
    const M3<double> Cp_n = to_m3(lp.old.Cp), Cpi_n = to_m3(lp.old.Cpi);
    for (int k = 0; k < 6; ++k) {
      out.R[k] = rp(ii[k], jj[k]) - Cp_n(ii[k], jj[k]);
      out.R[6 + k] = rk(ii[k], jj[k]) - Cpi_n(ii[k], jj[k]);
    }
    out.R[12] = out.phi_p / p.sigma0;
  } else if (!lp.plastic) {
    const int ii[6] = {0, 1, 2, 0, 1, 0}, jj[6] = {0, 1, 2, 1, 2, 2};
    for (int k = 0; k < 6; ++k) {
      out.R[k] = x[k] - lp.old.Cp(ii[k], jj[k]);
      out.R[6 + k] = x[6 + k] - lp.old.Cpi(ii[k], jj[k]);
    }
    out.R[12] = dlp;
  }
  if (lp.capped)
    out.R[13] = dld - (kDamageCap - lp.old.D);
  else if (lp.damage)
    out.R[13] = out.phi_d / std::max(p.Y0, 1.0);
  else
    out.R[13] = dld;
  return out;
}

using X14 = std::array<double, 14>;

X14 initial_unknowns(const GpState& st) {
  X14 x{};
  const int ii[6] = {0, 1, 2, 0, 1, 0}, jj[6] = {0, 1, 2, 1, 2, 2};
  for (int k = 0; k < 6; ++k) {
    x[k] = st.Cp(ii[k], jj[k]);
    x[6 + k] = st.Cpi(ii[k], jj[k]);
  }
  return x;
}

double residual_norm(const X14& x, const LocalProblem& lp) {
  const auto ev = local_eval<double>(x, lp, true);
  double r = 0.0;
  for (double v : ev.R) r = std::max(r, std::abs(v));
  return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

constexpr double kLocalTol = 1e-10;
constexpr int kLocalMaxIter = 50;

// Newton on the variables listed in vars; the remaining unknowns stay fixed
// (their equations are trivially satisfied by construction).
template <int N>
bool newton(X14& x, const LocalProblem& lp, const std::array<int, N>& vars, int& iters) {
  using D = Dual<N>;
  double rnorm = residual_norm(x, lp);
  bool polished = false;
  for (int it = 0; it < kLocalMaxIter; ++it) {
    std::array<D, 14> xd;
    for (int i = 0; i < 14; ++i) xd[i] = D(x[i]);
    for (int j = 0; j < N; ++j) xd[vars[j]] = D::variable(x[vars[j]], j);
    const auto ev = local_eval<D>(xd, lp, true);
    Eigen::Matrix<double, N, N> J;
    Eigen::Matrix<double, N, 1> r;
    for (int i = 0; i < N; ++i) {
      r[i] = ev.R[vars[i]].v;
      for (int j = 0; j < N; ++j) J(i, j) = ev.R[vars[i]].d[j];
    }
    if (!r.allFinite() || !J.allFinite()) return false;
    if (rnorm <= kLocalTol) {
      // One extra step drives the error to roundoff; finite-difference
      // tangents divide by small perturbations and need that accuracy.
      if (polished) return true;
      polished = true;
    }
    Eigen::PartialPivLU<Eigen::Matrix<double, N, N>> lu(J);
    const Eigen::Matrix<double, N, 1> dx = -lu.solve(r);
    if (!dx.allFinite()) return false;
    double alpha = 1.0;
    X14 trial = x;
    double tnorm = 0.0;
    for (int ls = 0; ls < 12; ++ls) {
      trial = x;
      for (int j = 0; j < N; ++j) trial[vars[j]] += alpha * dx[j];
      tnorm = residual_norm(trial, lp);
      if (tnorm < rnorm || rnorm <= kLocalTol) break;
      alpha *= 0.5;
    }
    ++iters;
    if (polished && !(tnorm <= rnorm)) return true;  // already at roundoff
    x = trial;
    rnorm = tnorm;
    if (!std::isfinite(rnorm)) return false;
  }
  return rnorm <= kLocalTol;
}

bool solve_local(X14& x, LocalProblem& lp, int& iters) {
  if (!lp.plastic && !lp.damage && !lp.capped) return true;
  if (!lp.plastic) {
    if (lp.capped) {
      x[13] = kDamageCap - lp.old.D;
      return true;
    }
    return newton<1>(x, lp, {13}, iters);
  }
  return newton<14>(x, lp, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}, iters);
}

struct Solved {
  X14 x;
  LocalProblem lp;
  UpdateInfo info;
};

GpState state_from(const X14& x, const GpState& old, const MaterialParams& p) {
  GpState st;
  st.Cp = to_eigen(M3<double>::sym(x, 0));
  st.Cpi = to_eigen(M3<double>::sym(x, 6));
  st.D = old.D + x[13];
  st.xi_d = old.xi_d + x[13];
  st.xi_p = old.xi_p + x[12] / std::pow(1.0 - st.D, p.dam_exponent);
  return st;
}

std::string describe(const LocalProblem& lp, const X14& x) {
  std::ostringstream os;
  os << "material update failed: plastic=" << lp.plastic << " damage=" << lp.damage
     << " residual=" << residual_norm(x, lp) << " dlambda_p=" << x[12] << " dlambda_d=" << x[13];
  return os.str();
}

Solved solve_update(const GpState& old, const Mat3& C, double Dbar, const MaterialParams& p) {
  LocalProblem lp{kinematics(C), old, Dbar, &p};
  const double scale_p = p.sigma0, scale_d = std::max(p.Y0, 1.0);
  const double act_p = 1e-9 * scale_p, act_d = 1e-9 * scale_d;
  const X14 x0 = initial_unknowns(old);

  const auto trial = local_eval<double>(x0, lp, false);
  lp.plastic = trial.phi_p > act_p;
  lp.damage = trial.phi_d > act_d && old.D < kDamageCap;

  Solved out{x0, lp, {}};
  int iters = 0;
  for (int sweep = 0; sweep < 4; ++sweep) {
    X14 x = x0;
    out.info.sweeps = sweep + 1;
    if (!solve_local(x, lp, iters)) throw MaterialError(describe(lp, x));
    if (lp.damage && old.D + x[13] > kDamageCap) {
      lp.capped = true;
      lp.damage = false;
      out.info.saturated = true;
      continue;
    }
    const auto ev = local_eval<double>(x, lp, false);
    bool changed = false;
    if (lp.plastic && x[12] < 0.0) {
      lp.plastic = false;
      changed = true;
    } else if (!lp.plastic && ev.phi_p > act_p) {
      lp.plastic = true;
      changed = true;
    }
    if (lp.damage && x[13] < 0.0) {
      lp.damage = false;
      changed = true;
    } else if (!lp.damage && !lp.capped && ev.phi_d > act_d) {
      lp.damage = true;
      changed = true;
    }
    out.x = x;
    out.lp = lp;
    out.info.phi_p = ev.phi_p;
    out.info.phi_d = ev.phi_d;
    if (!changed) {
      out.info.plastic = lp.plastic;
      out.info.damage = lp.damage;
      out.info.iterations = iters;
      out.info.dlambda_p = x[12];
      out.info.dlambda_d = x[13];
      return out;
    }
  }
  throw MaterialError("material update failed: active set did not settle within 3 sweeps");
}

Mat3 stress_of(const X14& x, const LocalProblem& lp) {
  const auto ev = local_eval<double>(x, lp, false);
  return to_eigen(ev.fd * ev.S_eff);
}

}  // namespace

Energies free_energy(const Mat3& C, const GpState& st, double Dbar, const Eigen::Vector3d& grad_Dbar,
                     const MaterialParams& p) {
  require_spd(C, "C");
  require_spd(st.Cp, "C_p");
  require_spd(st.Cpi, "C_pi");
  const double ratio = C.determinant() / st.Cp.determinant();
  const Mat3 Cpinv = st.Cp.inverse(), Cpiinv = st.Cpi.inverse();
  Energies E{};
  E.psi_e = 0.5 * p.mu * ((C * Cpinv).trace() - 3.0 - std::log(ratio)) +
            0.25 * p.lambda * (ratio - 1.0 - std::log(ratio));
  E.psi_p = 0.5 * p.a * ((st.Cp * Cpiinv).trace() - 3.0 - std::log(st.Cp.determinant() / st.Cpi.determinant())) +
            p.e * (st.xi_p + (std::exp(-p.f * st.xi_p) - 1.0) / p.f);
  E.psi_d = p.r * (st.xi_d + (std::exp(-p.s * st.xi_d) - 1.0) / p.s);
  E.psi_dbar = 0.5 * p.H * (st.D - Dbar) * (st.D - Dbar) + 0.5 * p.A * grad_Dbar.squaredNorm();
  E.total = f_dam(st.D, p) * (E.psi_e + E.psi_p) + E.psi_d + E.psi_dbar;
  return E;
}

Mat3 stress(const Mat3& C, const GpState& st, const MaterialParams& p) {
  require_spd(C, "C");
  const Mat3 Cinv = C.inverse();
  const double ratio = C.determinant() / st.Cp.determinant();
  return f_dam(st.D, p) * (p.mu * (st.Cp.inverse() - Cinv) + 0.5 * p.lambda * (ratio - 1.0) * Cinv);
}

ConjugateForces conjugate_forces(const Mat3& C, const GpState& st, double Dbar, const MaterialParams& p) {
  const double fd = f_dam(st.D, p);
  const Energies E = free_energy(C, st, Dbar, Eigen::Vector3d::Zero(), p);
  ConjugateForces cf;
  const Mat3 S = stress(C, st, p);
  cf.X = fd * p.a * (st.Cpi.inverse() - st.Cp.inverse());
  cf.q_p = fd * p.e * (1.0 - std::exp(-p.f * st.xi_p));
  cf.q_d = p.r * (1.0 - std::exp(-p.s * st.xi_d));
  cf.Y_drive = -f_dam_prime(st.D, p) * (E.psi_e + E.psi_p) - p.H * (st.D - Dbar);
  cf.Y_kin = st.Cp * cf.X;
  cf.Y_aux = C * S - cf.Y_kin;
  return cf;
}

double yield_function(const Mat3& C, const GpState& st, const MaterialParams& p) {
  LocalProblem lp{kinematics(C), st, 0.0, &p};
  return local_eval<double>(initial_unknowns(st), lp, false).phi_p;
}

double damage_function(const Mat3& C, const GpState& st, double Dbar, const MaterialParams& p) {
  LocalProblem lp{kinematics(C), st, Dbar, &p};
  return local_eval<double>(initial_unknowns(st), lp, false).phi_d;
}

GpUpdate gp_update(const GpState& old, const Mat3& C, double Dbar, const MaterialParams& p) {
  const Solved s = solve_update(old, C, Dbar, p);
  return {state_from(s.x, old, p), stress_of(s.x, s.lp), s.info};
}

Vec6 voigt_stress(const Mat3& S) {
  Vec6 v;
  v << S(0, 0), S(1, 1), S(2, 2), S(0, 1), S(1, 2), S(0, 2);
  return v;
}

Mat3 from_voigt_stress(const Vec6& v) {
  Mat3 S;
  S << v[0], v[3], v[5], v[3], v[1], v[4], v[5], v[4], v[2];
  return S;
}

GpResult gp_tangents(const GpState& old, const Mat3& C, double Dbar, const MaterialParams& p) {
  const Solved base = solve_update(old, C, Dbar, p);
  GpResult out;
  out.state = state_from(base.x, old, p);
  out.info = base.info;
  out.response.S = stress_of(base.x, base.lp);
  out.response.D = out.state.D;

  const bool inelastic = base.lp.plastic || base.lp.damage;
  // Perturbed solve on the base active set, warm-started from the base solution.
  auto evaluate = [&](const Mat3& Cq, double Dq, Vec6& S, double& D) {
    LocalProblem lp = base.lp;
    lp.kin = kinematics(Cq);
    lp.Dbar = Dq;
    X14 x = base.x;
    int iters = 0;
    if (inelastic && !solve_local(x, lp, iters)) throw MaterialError(describe(lp, x));
    S = voigt_stress(stress_of(x, lp));
    D = old.D + x[13];
  };

  const int ii[6] = {0, 1, 2, 0, 1, 0}, jj[6] = {0, 1, 2, 1, 2, 2};
  Vec6 Sp, Sm;
  double Dp = 0.0, Dm = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double h = 1e-6 * std::max(std::abs(C(ii[k], jj[k])), 1.0);
    Mat3 Cp = C, Cm = C;
    Cp(ii[k], jj[k]) += h;
    Cm(ii[k], jj[k]) -= h;
    if (ii[k] != jj[k]) {
      Cp(jj[k], ii[k]) += h;
      Cm(jj[k], ii[k]) -= h;
    }
    evaluate(Cp, Dbar, Sp, Dp);
    evaluate(Cm, Dbar, Sm, Dm);
    // dC_aa = 2 dE_aa; for shear the perturbation of both entries equals dgamma.
    const double fac = (k < 3 ? 2.0 : 1.0) / (2.0 * h);
    out.response.dS_dE.col(k) = fac * (Sp - Sm);
    out.response.dD_dE[k] = fac * (Dp - Dm);
  }
  if (inelastic) {
    const double h = 1e-6;
    evaluate(C, Dbar + h, Sp, Dp);
    evaluate(C, Dbar - h, Sm, Dm);
    out.response.dS_dDbar = (Sp - Sm) / (2.0 * h);
    out.response.dD_dDbar = (Dp - Dm) / (2.0 * h);
  } else {
    out.response.dS_dDbar.setZero();
    out.response.dD_dDbar = 0.0;
  }
  return out;
}

}  // namespace dpmor
