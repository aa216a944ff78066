#include "dpmor/solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace dpmor {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Residual and energy tests shared by Newton and the arc-length corrector.
struct Convergence {
  const SolverOptions& opt;
  double scale = 0.0;
  double e_ref = -1.0;

  bool check(double gnorm, double energy) {
    if (e_ref < 0.0) e_ref = energy;
    const bool res_ok = gnorm <= opt.tol_residual * scale;
    const bool energy_ok = energy <= opt.tol_energy * e_ref;
    return res_ok && energy_ok;
  }
};

}  // namespace

NewtonResult newton_solve(DiscreteSystem& sys, const Vec& x0, double lambda, const SolverOptions& opt) {
  NewtonResult out;
  out.x = x0;
  const Vec& P0 = sys.reference_load();
  Convergence conv{opt};
  for (int it = 0; it <= opt.max_iter; ++it) {
    const auto t0 = Clock::now();
    sys.linearize(out.x, lambda);
    const Vec G = sys.internal_force() - lambda * P0;
    const Vec dU = sys.solve(-G);
    out.iter_ms.push_back(ms_since(t0));
    const double gn = inf_norm(G);
    out.residuals.push_back(gn);
    if (!std::isfinite(gn) || !dU.allFinite()) break;
    if (it == 0) conv.scale = std::max(std::abs(lambda) * inf_norm(P0), gn);
    if (conv.check(gn, std::abs(G.dot(dU)))) {
      out.iterations = it;
      out.iter_ms.pop_back();  // the final check is not an iteration
      return out;
    }
    if (it == opt.max_iter) break;
    out.x += dU;
  }
  std::ostringstream msg;
  msg << "Newton diverged at lambda=" << lambda << " after " << opt.max_iter << " iterations; residuals:";
  for (double r : out.residuals) msg << ' ' << r;
  throw NewtonDivergedError(msg.str(), out.residuals);
}

int sign_switch(double rc, double rc1, double rc2, int r) {
  const bool down = rc1 > 0.0 && rc < 0.0 && rc1 < rc2;
  const bool up = rc1 < 0.0 && rc > 0.0 && rc1 > rc2;
  return (down || up) ? -r : r;
}

ArcStepResult arc_length_step(DiscreteSystem& sys, const ArcState& state, const PathPoint& prev,
                              const SolverOptions& opt, double ds_scale, bool reuse_linearization) {
  ArcStepResult out;
  out.state = state;
  ArcState& st = out.state;
  const Vec& P0 = sys.reference_load();

  // Predictor.
  auto t0 = Clock::now();
  if (!reuse_linearization) sys.linearize(prev.x, prev.lambda);
  const Vec G0 = sys.internal_force() - (prev.lambda + st.dlambda0) * P0;
  const Vec dU1 = sys.solve(-G0);
  const double ds_pred = dU1.norm();
  const double c = dU1.dot(P0);
  if (!(ds_pred > 0.0) || !std::isfinite(ds_pred) || c == 0.0)
    throw SolverError("arc-length predictor degenerate (zero or non-finite increment)");
  if (st.step == 0) {
    st.c0 = c;
    if (!(st.ds0 > 0.0)) st.ds0 = ds_pred;
  }
  const double rc = st.c0 / c;
  st.r = sign_switch(rc, st.rc1, st.rc2, st.r);
  const double ds = st.ds0 * ds_scale;
  const double dlam_pred = ds / ds_pred * st.r;
  const Vec dUI = dlam_pred * dU1;
  out.diag.ds = ds;
  out.diag.predictor_norm_error = std::abs(dUI.norm() - ds) / ds;

  Vec x = prev.x + dUI;
  double lambda = prev.lambda + st.dlambda0 * dlam_pred;
  const double dUI_sq = dUI.squaredNorm();
  const double dUI_norm = std::sqrt(dUI_sq);

  Convergence conv{opt};
  bool converged = false;
  int iters = 0;
  double ms_pred = ms_since(t0);
  for (int it = 0; it <= opt.max_iter; ++it) {
    t0 = Clock::now();
    sys.linearize(x, lambda);
    const Vec G = sys.internal_force() - lambda * P0;
    const Vec dUG = sys.solve(-G);
    const double gn = inf_norm(G);
    out.diag.residuals.push_back(gn);
    if (!std::isfinite(gn) || !dUG.allFinite()) break;
    if (it == 0) conv.scale = std::max(std::abs(lambda) * inf_norm(P0), inf_norm(G0));
    if (conv.check(gn, std::abs(G.dot(dUG)))) {
      converged = true;
      iters = it;
      break;
    }
    if (it == opt.max_iter) break;
    const Vec dUII = sys.solve(P0);
    const double denom = dUI.dot(dUII);
    if (denom == 0.0 || !std::isfinite(denom)) throw SolverError("arc-length corrector: dU_I orthogonal to dU_II");
    const double dlam = -dUI.dot(dUG) / denom;
    Vec dU = dUG + dlam * dUII;
    // Measured against the two parts of the update, which may cancel.
    const double parts = dUG.norm() + std::abs(dlam) * dUII.norm();
    double orth = parts > 0.0 ? std::abs(dUI.dot(dU)) / (dUI_norm * parts) : 0.0;
    if (orth > 1e-12) {
      // Roundoff in the two dot products; project back onto the constraint.
      dU -= (dUI.dot(dU) / dUI_sq) * dUI;
      orth = std::abs(dUI.dot(dU)) / (dUI_norm * parts);
    }
    out.diag.max_orthogonality = std::max(out.diag.max_orthogonality, orth);
    x += dU;
    lambda += dlam;
    out.diag.iter_ms.push_back(ms_since(t0) + ms_pred);
    ms_pred = 0.0;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "arc-length step " << prev.t + 1 << " did not converge; residuals:";
    for (double r : out.diag.residuals) msg << ' ' << r;
    throw NewtonDivergedError(msg.str(), out.diag.residuals);
  }

  st.rc2 = st.rc1;
  st.rc1 = rc;
  ++st.step;
  out.point.t = prev.t + 1;
  out.point.lambda = lambda;
  out.point.x = x;
  out.point.n_iters = iters;
  return out;
}

ControlType parse_control_type(const std::string& s) {
  if (s == "load") return ControlType::Load;
  if (s == "displacement") return ControlType::Displacement;
  if (s == "arclength") return ControlType::ArcLength;
  throw SolverError("unknown control type '" + s + "' (expected load, displacement or arclength)");
}

PathResult run_path(DiscreteSystem& sys, const ControlSpec& ctl, const StepObserver& observer) {
  PathResult res;
  if (ctl.steps < 1) throw SolverError("control.steps must be >= 1");
  if (ctl.type != ControlType::ArcLength && !ctl.lambdas.empty() &&
      static_cast<int>(ctl.lambdas.size()) < ctl.steps)
    throw SolverError("explicit load levels shorter than the step count");

  PathPoint prev;
  prev.x = Vec::Zero(sys.size());
  ArcState arc;
  arc.ds0 = ctl.ds0;
  arc.dlambda0 = ctl.dlambda0;
  bool linearized_at_prev = false;

  auto finish_point = [&](PathPoint& pt, double wall) {
    pt.u_A = sys.monitor_u(pt.x, pt.lambda);
    pt.p = sys.monitor_p(pt.lambda);
    pt.x_norm = sys.full_state(pt.x).norm();
    pt.wall_ms = wall;
  };

  for (int t = 1; t <= ctl.steps; ++t) {
    const auto t0 = Clock::now();
    bool ok = false;
    std::string last_error;
    PathPoint point;
    std::vector<double> iter_ms;
    std::vector<std::size_t> iter_elems;
    for (int h = 0; h <= ctl.retry_halvings && !ok; ++h) {
      try {
        if (ctl.type == ControlType::ArcLength) {
          const ArcStepResult r =
              arc_length_step(sys, arc, prev, ctl.solver, std::ldexp(1.0, -h), linearized_at_prev && h == 0);
          arc = r.state;
          point = r.point;
          iter_ms = r.diag.iter_ms;
          res.max_orthogonality = std::max(res.max_orthogonality, r.diag.max_orthogonality);
          res.max_predictor_error = std::max(res.max_predictor_error, r.diag.predictor_norm_error);
        } else {
          const double target = ctl.lambdas.empty() ? t * ctl.dlambda0 : ctl.lambdas[static_cast<std::size_t>(t - 1)];
          const int sub = 1 << h;
          const double start = prev.lambda;
          Vec x = prev.x;
          int iters = 0;
          iter_ms.clear();
          for (int s = 1; s <= sub; ++s) {
            const double lam = start + (target - start) * s / sub;
            const NewtonResult nr = newton_solve(sys, x, lam, ctl.solver);
            x = nr.x;
            iters += nr.iterations;
            iter_ms.insert(iter_ms.end(), nr.iter_ms.begin(), nr.iter_ms.end());
            if (s < sub) {
              // Intermediate equilibrium points become history.
              sys.commit();
              prev.x = x;
              prev.lambda = lam;
            }
          }
          point.t = t;
          point.lambda = target;
          point.x = x;
          point.n_iters = iters;
        }
        ok = true;
        res.total_halvings += h;
      } catch (const Error& ex) {
        last_error = ex.what();
        linearized_at_prev = false;
      }
    }
    if (!ok) {
      res.failure = "step " + std::to_string(t) + ": " + last_error;
      res.arc = arc;
      return res;
    }
    iter_elems.assign(iter_ms.size(), sys.last_evaluated_elements());
    finish_point(point, ms_since(t0));
    if (observer) observer(point, sys);
    sys.commit();
    linearized_at_prev = true;
    res.iter_ms.insert(res.iter_ms.end(), iter_ms.begin(), iter_ms.end());
    res.elements_per_iteration.insert(res.elements_per_iteration.end(), iter_elems.begin(), iter_elems.end());
    res.points.push_back(point);
    prev = point;
  }
  res.completed = true;
  res.arc = arc;
  return res;
}

}  // namespace dpmor
