#pragma once

#include "dpmor/hex8.hpp"
#include "dpmor/material.hpp"
#include "dpmor/mesh.hpp"
#include "dpmor/system.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace dpmor {

using ElementStates = std::array<GpState, 8>;
using Vec24 = Eigen::Matrix<double, 24, 1>;
using Vec32 = Eigen::Matrix<double, 32, 1>;
using Mat32 = Eigen::Matrix<double, 32, 32>;

/// Reference-configuration gradients and weights at the eight Gauss points.
struct ElementGeometry {
  std::array<hex8::Mat83, 8> dNdX;
  std::array<double, 8> wdetJ;
};

ElementGeometry element_geometry(const Mesh& mesh, int e);

struct ElementKernelOut {
  Vec24 r_u;
  hex8::Vec8 r_dbar;
  Vec24 p_u;  // external part; stays zero (no body forces)
  Eigen::Matrix<double, 24, 24> k_uu;
  Eigen::Matrix<double, 24, 8> k_udbar;
  Eigen::Matrix<double, 8, 24> k_dbaru;
  Eigen::Matrix<double, 8, 8> k_dbardbar;

  /// Residual and stiffness in interleaved order (4 per node).
  Vec32 residual() const;
  Mat32 stiffness() const;
};

/// u: 24 displacements (node-major), dbar: 8 nodal Dbar values. Material
/// failures are rethrown with the element and Gauss point attached.
ElementKernelOut element_kernel(const ElementGeometry& geo, const Vec24& u, const hex8::Vec8& dbar,
                                const ElementStates& old, const MaterialParams& params, ElementStates& updated,
                                int elem_id = -1);

/// Global assembly on a fixed sparsity pattern over the free DOFs. Element
/// contributions are summed in element order, so the result does not depend
/// on the number of threads.
class Assembler {
public:
  Assembler(const Mesh& mesh, const DofMap& dofs, const MaterialParams& params, int threads = 1);

  /// R over all DOFs; K restricted to free rows and columns.
  void assemble(const Vec& U_full, Vec& R_full, SparseMatrix& K_free);

  /// Same numbers as assemble() at the listed free rows; touches only the
  /// elements adjacent to those rows.
  void assemble_selected(const Vec& U_full, const std::vector<Index>& free_rows, Vec& R_sel, RowBlock& K_rows);

  /// Elements that contain a node of any listed free row, ascending.
  std::vector<int> adjacent_elements(const std::vector<Index>& free_rows) const;

  SparseMatrix linear_stiffness() const;

  /// Promote trial states of the elements evaluated since the last commit.
  void commit();
  void reset_states();

  const std::vector<ElementStates>& states() const { return old_; }
  std::size_t last_evaluated() const { return last_evaluated_; }
  const SparseMatrix& pattern() const { return pattern_; }

  /// Uniform traction on a side set with the given resultant, as a full vector.
  Vec surface_load(const std::string& side_set, const Eigen::Vector3d& total_force) const;

private:
  void evaluate_elements(const Vec& U_full, const std::vector<int>& elems, const std::vector<ElementStates>& from,
                         bool write_trial);

  const Mesh& mesh_;
  const DofMap& dofs_;
  MaterialParams params_;
  int threads_;
  std::vector<ElementGeometry> geo_;
  std::vector<std::array<Index, 32>> edofs_;       // global DOF per local index
  std::vector<std::array<Index, 32>> efree_;       // free index or -1
  std::vector<std::array<int, 32 * 32>> scatter_;  // position in pattern values or -1
  SparseMatrix pattern_;
  std::vector<std::vector<int>> node_elems_;
  std::vector<ElementStates> old_, trial_;
  std::vector<char> dirty_;
  std::vector<Vec32> rbuf_;
  std::vector<Mat32> kbuf_;
  std::size_t last_evaluated_ = 0;
};

struct LoadSpec {
  std::string side_set;
  Eigen::Vector3d total_force = Eigen::Vector3d::Zero();
};

struct MonitorSpec {
  std::string node_set = "point_A";
  int component = 1;
};

/// Finite-element model exposed through the Model interface. Under
/// displacement control the load measure is the reaction on the loaded set.
class FemModel : public Model {
public:
  FemModel(Mesh mesh, DofMap dofs, const MaterialParams& params, const LoadSpec& load, const MonitorSpec& monitor,
           int threads = 1, const std::string& reaction_set = "", int reaction_component = 1);

  Index size() const override { return dofs_.nfree(); }
  const Vec& reference_load() const override { return P0_; }
  void evaluate(const Vec& x, double lambda, Vec& R, SparseMatrix& K) override;
  void evaluate_rows(const Vec& x, double lambda, const std::vector<Index>& rows, Vec& R, RowBlock& K) override;
  void commit() override { asm_.commit(); }
  SparseMatrix linear_stiffness() override { return asm_.linear_stiffness(); }
  double monitor_u(const Vec& x, double lambda) const override;
  double monitor_p(double lambda) const override;
  std::size_t last_evaluated_elements() const override { return asm_.last_evaluated(); }
  std::vector<int> row_support(const std::vector<Index>& rows) const override {
    return asm_.adjacent_elements(rows);
  }

  const Mesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  Assembler& assembler() { return asm_; }
  const Vec& full_reference_load() const { return P0_full_; }
  double load_magnitude() const { return load_mag_; }

private:
  Mesh mesh_;
  DofMap dofs_;
  Assembler asm_;
  Vec P0_full_, P0_;
  double load_mag_ = 0.0;
  int monitor_dof_ = 0;
  std::vector<Index> reaction_dofs_;
  double last_reaction_ = 0.0;
};

/// Per-node field output: node, x, y, z, u_x, u_y, u_z, Dbar.
void write_node_csv(const std::filesystem::path& path, const Mesh& mesh, const Vec& U_full,
                    const std::string& header_comment);
/// Per-Gauss-point history output: element, gp, xi_p, xi_d, D.
void write_gp_csv(const std::filesystem::path& path, const std::vector<ElementStates>& states,
                  const std::string& header_comment);

}  // namespace dpmor
