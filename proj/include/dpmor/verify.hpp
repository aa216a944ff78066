#pragma once

#include "dpmor/material.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dpmor::verify {

/// Outcome of one invariant family. value is the worst observed quantity,
/// limit the bound it is held to.
struct CheckResult {
  std::string family;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
  double seconds = 0.0;
};

CheckResult partition_of_unity(std::uint64_t seed, int samples);
/// Quadrature volume of the generated meshes against the exact geometry.
CheckResult quadrature_volume();
/// Affine displacement of a single (skewed) element: F exact at every Gauss
/// point and nodal forces equal to the closed-form surface integral.
CheckResult patch_test();

/// Randomized strain/Dbar histories through gp_update; KKT conditions of
/// both loading surfaces after every converged update.
CheckResult material_kkt(const MaterialParams& p, const std::string& label, int histories, std::uint64_t seed);

/// Element stiffness blocks against central differences of the element residual.
CheckResult element_tangent(std::uint64_t seed, int samples);
/// ||G(U+eps v) - G(U) - eps K v|| / (eps ||K v||) at random states of a 3x3x1 mesh.
CheckResult global_tangent(std::uint64_t seed, int states, double eps = 1e-6);

/// Greedy index sequences against a second, independent implementation.
CheckResult deim_oracle(std::uint64_t seed, int matrices, int rows = 50, int cols = 10, int kmax = 8);
/// ||Z^T (approx - R_nl)||_inf at random reduced states of a small FE model.
CheckResult deim_exactness(std::uint64_t seed, int states);

/// Arc-length through the truss snap-through: equilibrium error, Ramm
/// orthogonality and predictor length.
CheckResult arc_length_truss();
/// Load-controlled Newton on the same truss cannot follow the path past the
/// first limit point: it either diverges or lands on the remote branch.
CheckResult load_control_fails();
/// Truss chain whose equilibrium path spans two dimensions: the ROM with the
/// full basis reproduces the full path.
CheckResult exact_reduction_chain();

/// All families; full = true uses the acceptance sample sizes.
std::vector<CheckResult> run_all(std::uint64_t seed, bool full);

std::string to_json(const std::vector<CheckResult>& results);

}  // namespace dpmor::verify
