#pragma once

#include "dpmor/numerics.hpp"

#include <Eigen/Dense>

#include <string>

namespace dpmor {

class MaterialError : public Error {
public:
  using Error::Error;
};

/// Raised by f_dam when D reaches one.
class FullyDamagedError : public MaterialError {
public:
  using MaterialError::MaterialError;
};

using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Units: MPa, mm. A carries MPa mm^2.
struct MaterialParams {
  double lambda = 0, mu = 0, sigma0 = 0, a = 0, b = 0, e = 0, f = 0, Y0 = 0, r = 0, s = 0, A = 0, H = 0;
  double dam_exponent = 2.0;

  static MaterialParams plate();    // parameter set of the plate with a hole
  static MaterialParams notched();  // parameter set of the notched specimen

  void validate() const;
  double internal_length() const;
};

struct GpState {
  Mat3 Cp = Mat3::Identity();
  Mat3 Cpi = Mat3::Identity();
  double xi_p = 0.0;
  double xi_d = 0.0;
  double D = 0.0;
};

inline constexpr double kDamageCap = 1.0 - 1e-6;

double f_dam(double D, const MaterialParams& p);
double f_dam_prime(double D, const MaterialParams& p);

struct Energies {
  double total, psi_e, psi_p, psi_d, psi_dbar;
};

Energies free_energy(const Mat3& C, const GpState& st, double Dbar, const Eigen::Vector3d& grad_Dbar,
                     const MaterialParams& p);

Mat3 stress(const Mat3& C, const GpState& st, const MaterialParams& p);

struct ConjugateForces {
  Mat3 X;
  double q_p;
  double Y_drive;
  double q_d;
  Mat3 Y_aux;
  Mat3 Y_kin;
};

ConjugateForces conjugate_forces(const Mat3& C, const GpState& st, double Dbar, const MaterialParams& p);

/// Loading functions evaluated at a given state.
double yield_function(const Mat3& C, const GpState& st, const MaterialParams& p);
double damage_function(const Mat3& C, const GpState& st, double Dbar, const MaterialParams& p);

struct UpdateInfo {
  double dlambda_p = 0.0;
  double dlambda_d = 0.0;
  bool plastic = false;
  bool damage = false;
  bool saturated = false;  // D hit kDamageCap
  int iterations = 0;
  int sweeps = 0;
  double phi_p = 0.0;
  double phi_d = 0.0;
};

struct GpUpdate {
  GpState state;
  Mat3 S;
  UpdateInfo info;
};

/// Backward-Euler update of the internal variables for a new C and Dbar.
/// Throws MaterialError when the local Newton iteration does not converge.
GpUpdate gp_update(const GpState& old, const Mat3& C, double Dbar, const MaterialParams& p);

struct GpResponse {
  Mat3 S;
  double D = 0.0;
  Mat6 dS_dE;      // columns: strain-like Voigt (shear carries 2E)
  Vec6 dS_dDbar;   // stress-like Voigt
  Vec6 dD_dE;      // strain-like Voigt
  double dD_dDbar = 0.0;
};

struct GpResult {
  GpState state;
  GpResponse response;
  UpdateInfo info;
};

/// Update plus tangent blocks by central differences of the converged update,
/// holding the active set of the base point fixed.
GpResult gp_tangents(const GpState& old, const Mat3& C, double Dbar, const MaterialParams& p);

// Voigt order (xx, yy, zz, xy, yz, xz).
Vec6 voigt_stress(const Mat3& S);
Mat3 from_voigt_stress(const Vec6& v);

}  // namespace dpmor
