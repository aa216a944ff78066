#pragma once

#include "dpmor/numerics.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dpmor {

class MeshError : public Error {
public:
  using Error::Error;
};

using Point3 = Eigen::Vector3d;
using Hex = std::array<int, 8>;
using SideRef = std::pair<int, int>;  // (element, local face)

struct Mesh {
  std::vector<Point3> nodes;
  std::vector<Hex> elements;
  std::map<std::string, std::vector<int>> node_sets;
  std::map<std::string, std::vector<SideRef>> side_sets;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_elements() const { return elements.size(); }
  const std::vector<int>& node_set(const std::string& name) const;
  const std::vector<SideRef>& side_set(const std::string& name) const;
};

/// Quarter plate with a central hole. The hole sits at the origin, the plate
/// occupies x in [0, width/2], y in [0, height/2]. nx elements along the top
/// edge, ny along the right edge, nr radially, nz through the thickness.
struct PlateSpec {
  double width = 20.0;
  double height = 40.0;
  double radius = 5.0;
  double thickness = 1.0;
  int nx = 8;
  int ny = 11;
  int nr = 8;
  int nz = 1;
  double radial_grading = 1.0;  // >1 clusters rings towards the hole
};

/// Full specimen with two semicircular edge notches at different heights.
struct NotchedSpec {
  double height = 60.0;
  double width = 20.0;
  double thickness = 1.0;
  double notch_radius = 4.0;
  double notch_offset = 8.0;  // vertical distance between the notch centres
  int refinement = 2;
};

/// Structured block [0,lx] x [0,ly] x [0,lz]. Node sets x0, x1, y0, y1, z0,
/// z1 on the six faces; side sets of the same names for the three far faces.
struct BoxSpec {
  double lx = 1.0, ly = 1.0, lz = 1.0;
  int nx = 1, ny = 1, nz = 1;
};

Mesh gen_plate_with_hole(const PlateSpec& spec);
Mesh gen_box(const BoxSpec& spec);
Mesh gen_asym_notched(const NotchedSpec& spec);

/// Throws MeshError on bad indices, duplicate set entries or non-positive
/// Jacobians at any Gauss point.
void validate(const Mesh& mesh);

double min_jacobian(const Mesh& mesh);
double quadrature_volume(const Mesh& mesh);
double element_volume(const Mesh& mesh, int e);

/// Node index closest to p.
int nearest_node(const Mesh& mesh, const Point3& p);

/// For each node, the sorted list of elements that contain it.
std::vector<std::vector<int>> node_to_elements(const Mesh& mesh);

Mesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

// --- DOF numbering -------------------------------------------------------

inline constexpr int kDofsPerNode = 4;  // u_x, u_y, u_z, Dbar

struct Dirichlet {
  Index dof;
  double value;  // prescribed value per unit load factor
};

class DofMap {
public:
  DofMap() = default;
  DofMap(std::size_t num_nodes, std::vector<Dirichlet> dirichlet);

  Index ndofs() const { return ndofs_; }
  Index nfree() const { return static_cast<Index>(free_.size()); }
  static Index dof(int node, int comp) { return static_cast<Index>(kDofsPerNode) * node + comp; }

  const std::vector<Index>& free_dofs() const { return free_; }
  const std::vector<Dirichlet>& dirichlet() const { return dirichlet_; }
  /// Free index of a global DOF, or -1 when prescribed.
  Index free_index(Index dof) const { return to_free_[static_cast<std::size_t>(dof)]; }

  /// Full vector from free values plus lambda-scaled prescribed values.
  Vec expand(const Vec& free, double lambda) const;
  Vec restrict_free(const Vec& full) const;
  bool has_nonzero_prescribed() const;

private:
  Index ndofs_ = 0;
  std::vector<Dirichlet> dirichlet_;
  std::vector<Index> free_;
  std::vector<Index> to_free_;
};

/// Dirichlet entries fixing component comp on every node of a set.
std::vector<Dirichlet> fix_component(const Mesh& mesh, const std::string& set, int comp, double value = 0.0);

}  // namespace dpmor
