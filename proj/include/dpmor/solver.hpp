#pragma once

#include "dpmor/system.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dpmor {

class SolverError : public Error {
public:
  using Error::Error;
};

/// Newton iteration hit max_iter; carries the residual history.
class NewtonDivergedError : public SolverError {
public:
  NewtonDivergedError(const std::string& what, std::vector<double> history)
      : SolverError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

struct SolverOptions {
  double tol_residual = 1e-8;  // on ||G||_inf relative to the load scale
  double tol_energy = 1e-10;   // on |G^T dU| relative to the first iteration
  int max_iter = 25;
};

struct NewtonResult {
  Vec x;
  int iterations = 0;
  std::vector<double> residuals;
  std::vector<double> iter_ms;
};

/// Newton at fixed lambda. On return the system is linearized at the
/// solution (trial states match it, nothing is committed).
NewtonResult newton_solve(DiscreteSystem& sys, const Vec& x0, double lambda, const SolverOptions& opt);

struct ArcState {
  double ds0 = 0.0;  // 0 selects the first step's predictor norm
  double dlambda0 = 1.0;
  double c0 = 0.0;
  int r = 1;
  double rc1 = 1.0;  // stiffness ratio at t-1
  double rc2 = 1.0;  // and at t-2
  int step = 0;      // accepted steps so far
};

/// New sign of the load increment given the current stiffness ratio rc and
/// the two previous ones.
int sign_switch(double rc, double rc1, double rc2, int r);

struct PathPoint {
  int t = 0;
  double lambda = 0.0;
  Vec x;
  double u_A = 0.0;
  double p = 0.0;
  double x_norm = 0.0;
  int n_iters = 0;
  double wall_ms = 0.0;
};

struct StepDiagnostics {
  double max_orthogonality = 0.0;     // |dU_I . dU| / (|dU_I| (|dU_G| + |dlambda| |dU_II|))
  double predictor_norm_error = 0.0;  // | |dU_I| - ds | / ds
  double ds = 0.0;
  std::vector<double> iter_ms;
  std::vector<double> residuals;
};

struct ArcStepResult {
  PathPoint point;
  ArcState state;
  StepDiagnostics diag;
};

/// One Ramm arc-length step from the converged point prev. The step uses
/// ds_scale * ds0 (step halving passes 1/2, 1/4, ...). reuse_linearization
/// says the system is already linearized at prev.
ArcStepResult arc_length_step(DiscreteSystem& sys, const ArcState& state, const PathPoint& prev,
                              const SolverOptions& opt, double ds_scale = 1.0, bool reuse_linearization = false);

enum class ControlType { Load, Displacement, ArcLength };

struct ControlSpec {
  ControlType type = ControlType::ArcLength;
  int steps = 10;
  double ds0 = 0.0;  // arc length; 0 = auto
  double dlambda0 = 1.0;
  std::vector<double> lambdas;  // explicit load levels for load/displacement control
  SolverOptions solver;
  int retry_halvings = 4;
};

ControlType parse_control_type(const std::string& s);

struct PathResult {
  std::vector<PathPoint> points;
  bool completed = false;
  std::string failure;
  ArcState arc;
  double max_orthogonality = 0.0;
  double max_predictor_error = 0.0;
  std::vector<double> iter_ms;      // every Newton/corrector iteration of accepted steps
  std::vector<std::size_t> elements_per_iteration;
  int total_halvings = 0;
};

/// Called after a step converged and before its state is committed; the
/// system is linearized at the accepted point.
using StepObserver = std::function<void(const PathPoint&, DiscreteSystem&)>;

/// Runs the requested number of steps starting from x = 0, lambda = 0.
/// Stops early (completed = false) on an unrecoverable step failure.
PathResult run_path(DiscreteSystem& sys, const ControlSpec& ctl, const StepObserver& observer = {});

}  // namespace dpmor
