#include "dpmor/mesh.hpp"

#include "dpmor/hex8.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace dpmor {

using nlohmann::json;

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw MeshError("mesh has no node set '" + name + "'");
  return it->second;
}

const std::vector<SideRef>& Mesh::side_set(const std::string& name) const {
  auto it = side_sets.find(name);
  if (it == side_sets.end()) throw MeshError("mesh has no side set '" + name + "'");
  return it->second;
}

namespace {

Eigen::Matrix3d jacobian(const Mesh& mesh, int e, const hex8::Mat83& dN) {
  Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
  for (int a = 0; a < 8; ++a) J += mesh.nodes[mesh.elements[e][a]] * dN.row(a);
  return J;
}

}  // namespace

Mesh gen_plate_with_hole(const PlateSpec& s) {
  const double W2 = 0.5 * s.width, H2 = 0.5 * s.height;
  if (s.nx < 1 || s.ny < 1 || s.nr < 1 || s.nz < 1) throw MeshError("plate: element counts must be >= 1");
  if (!(s.radius > 0.0) || !(s.thickness > 0.0)) throw MeshError("plate: radius and thickness must be positive");
  if (!(s.radius < std::min(W2, H2))) throw MeshError("plate: hole radius must be smaller than both half dimensions");
  if (!(s.radial_grading > 0.0)) throw MeshError("plate: radial grading must be positive");

  const int nc = s.nx + s.ny;
  const double theta_c = std::atan2(H2, W2);
  const double half_pi = 0.5 * std::numbers::pi;
  auto idx = [&](int c, int k, int l) { return (l * (nc + 1) + c) * (s.nr + 1) + k; };

  Mesh m;
  m.nodes.resize(static_cast<std::size_t>((nc + 1) * (s.nr + 1) * (s.nz + 1)));
  for (int l = 0; l <= s.nz; ++l) {
    const double z = s.thickness * l / s.nz;
    for (int c = 0; c <= nc; ++c) {
      double theta;
      Eigen::Vector2d outer;
      if (c <= s.ny) {
        theta = theta_c * c / s.ny;
        outer = {W2, H2 * c / s.ny};
      } else {
        const int j = c - s.ny;
        theta = theta_c + (half_pi - theta_c) * j / s.nx;
        outer = {W2 * (1.0 - static_cast<double>(j) / s.nx), H2};
      }
      if (c == nc) theta = half_pi;
      const Eigen::Vector2d arc(s.radius * std::cos(theta), s.radius * std::sin(theta));
      for (int k = 0; k <= s.nr; ++k) {
        const double t = std::pow(static_cast<double>(k) / s.nr, s.radial_grading);
        Eigen::Vector2d p = (1.0 - t) * arc + t * outer;
        if (c == nc) p.x() = 0.0;
        if (c == 0) p.y() = 0.0;
        m.nodes[static_cast<std::size_t>(idx(c, k, l))] = Point3(p.x(), p.y(), z);
      }
    }
  }

  for (int l = 0; l < s.nz; ++l)
    for (int c = 0; c < nc; ++c)
      for (int k = 0; k < s.nr; ++k)
        m.elements.push_back({idx(c, k, l), idx(c, k + 1, l), idx(c + 1, k + 1, l), idx(c + 1, k, l),
                              idx(c, k, l + 1), idx(c, k + 1, l + 1), idx(c + 1, k + 1, l + 1),
                              idx(c + 1, k, l + 1)});

  auto& sym_x = m.node_sets["sym_x"];
  auto& sym_y = m.node_sets["sym_y"];
  auto& back_z = m.node_sets["back_z"];
  auto& load_edge = m.node_sets["load_edge"];
  for (int l = 0; l <= s.nz; ++l)
    for (int k = 0; k <= s.nr; ++k) {
      sym_x.push_back(idx(nc, k, l));
      sym_y.push_back(idx(0, k, l));
    }
  for (int c = 0; c <= nc; ++c)
    for (int k = 0; k <= s.nr; ++k) back_z.push_back(idx(c, k, 0));
  for (int l = 0; l <= s.nz; ++l)
    for (int c = s.ny; c <= nc; ++c) load_edge.push_back(idx(c, s.nr, l));

  auto& load_side = m.side_sets["load_edge"];
  for (int l = 0; l < s.nz; ++l)
    for (int c = s.ny; c < nc; ++c) load_side.push_back({(l * nc + c) * s.nr + (s.nr - 1), 3});

  for (auto& [name, v] : m.node_sets) std::sort(v.begin(), v.end());
  m.node_sets["point_A"] = {nearest_node(m, Point3(0.0, H2, 0.0))};
  validate(m);
  return m;
}

Mesh gen_box(const BoxSpec& s) {
  if (s.nx < 1 || s.ny < 1 || s.nz < 1) throw MeshError("box: element counts must be >= 1");
  if (!(s.lx > 0.0) || !(s.ly > 0.0) || !(s.lz > 0.0)) throw MeshError("box: edge lengths must be positive");
  auto idx = [&](int i, int j, int k) { return (k * (s.ny + 1) + j) * (s.nx + 1) + i; };
  Mesh m;
  for (int k = 0; k <= s.nz; ++k)
    for (int j = 0; j <= s.ny; ++j)
      for (int i = 0; i <= s.nx; ++i) {
        m.nodes.emplace_back(s.lx * i / s.nx, s.ly * j / s.ny, s.lz * k / s.nz);
        const int n = idx(i, j, k);
        if (i == 0) m.node_sets["x0"].push_back(n);
        if (i == s.nx) m.node_sets["x1"].push_back(n);
        if (j == 0) m.node_sets["y0"].push_back(n);
        if (j == s.ny) m.node_sets["y1"].push_back(n);
        if (k == 0) m.node_sets["z0"].push_back(n);
        if (k == s.nz) m.node_sets["z1"].push_back(n);
      }
  for (int k = 0; k < s.nz; ++k)
    for (int j = 0; j < s.ny; ++j)
      for (int i = 0; i < s.nx; ++i) {
        const int e = static_cast<int>(m.elements.size());
        m.elements.push_back({idx(i, j, k), idx(i + 1, j, k), idx(i + 1, j + 1, k), idx(i, j + 1, k),
                              idx(i, j, k + 1), idx(i + 1, j, k + 1), idx(i + 1, j + 1, k + 1),
                              idx(i, j + 1, k + 1)});
        if (i == s.nx - 1) m.side_sets["x1"].push_back({e, 3});
        if (j == s.ny - 1) m.side_sets["y1"].push_back({e, 4});
        if (k == s.nz - 1) m.side_sets["z1"].push_back({e, 1});
      }
  validate(m);
  return m;
}

Mesh gen_asym_notched(const NotchedSpec& s) {
  if (s.refinement < 1) throw MeshError("notched: refinement must be >= 1");
  if (!(s.notch_radius > 0.0) || !(s.width > 0.0) || !(s.height > 0.0) || !(s.thickness > 0.0))
    throw MeshError("notched: dimensions must be positive");
  const double r = s.notch_radius;
  const double yL = 0.5 * s.height + 0.5 * s.notch_offset;
  const double yR = 0.5 * s.height - 0.5 * s.notch_offset;
  if (yL + r >= s.height || yR - r <= 0.0 || yR + r >= s.height || yL - r <= 0.0)
    throw MeshError("notched: notches must lie inside the specimen height");

  auto depth = [r](double y, double yc) {
    const double d = r * r - (y - yc) * (y - yc);
    return d > 0.0 ? std::sqrt(d) : 0.0;
  };
  auto x_left = [&](double y) { return depth(y, yL); };
  auto x_right = [&](double y) { return s.width - depth(y, yR); };

  const double ylo = std::min(yL, yR) - r, yhi = std::max(yL, yR) + r;
  double min_gap = s.width;
  for (int i = 0; i <= 4000; ++i) {
    const double y = ylo + (yhi - ylo) * i / 4000.0;
    min_gap = std::min(min_gap, x_right(y) - x_left(y));
  }
  if (!(min_gap > 0.05 * s.width)) throw MeshError("notched: notches overlap or leave no ligament");

  const int n = s.refinement;
  const int nxe = 6 * n, nb = 3 * n, nm = 12 * n, nz = 1;
  std::vector<double> ys;
  for (int j = 0; j < nb; ++j) ys.push_back(ylo * j / nb);
  for (int j = 0; j < nm; ++j) ys.push_back(ylo + (yhi - ylo) * j / nm);
  for (int j = 0; j <= nb; ++j) ys.push_back(yhi + (s.height - yhi) * j / nb);
  const int nye = static_cast<int>(ys.size()) - 1;

  auto idx = [&](int i, int j, int l) { return (l * (nye + 1) + j) * (nxe + 1) + i; };
  Mesh m;
  m.nodes.resize(static_cast<std::size_t>((nxe + 1) * (nye + 1) * (nz + 1)));
  for (int l = 0; l <= nz; ++l)
    for (int j = 0; j <= nye; ++j) {
      const double y = ys[static_cast<std::size_t>(j)], a = x_left(y), b = x_right(y);
      for (int i = 0; i <= nxe; ++i)
        m.nodes[static_cast<std::size_t>(idx(i, j, l))] =
            Point3(a + (b - a) * i / nxe, y, s.thickness * l / nz);
    }
  for (int l = 0; l < nz; ++l)
    for (int j = 0; j < nye; ++j)
      for (int i = 0; i < nxe; ++i)
        m.elements.push_back({idx(i, j, l), idx(i + 1, j, l), idx(i + 1, j + 1, l), idx(i, j + 1, l),
                              idx(i, j, l + 1), idx(i + 1, j, l + 1), idx(i + 1, j + 1, l + 1),
                              idx(i, j + 1, l + 1)});

  auto& bottom = m.node_sets["bottom"];
  auto& top = m.node_sets["top_load"];
  auto& back = m.node_sets["back_z"];
  for (int l = 0; l <= nz; ++l)
    for (int i = 0; i <= nxe; ++i) {
      bottom.push_back(idx(i, 0, l));
      top.push_back(idx(i, nye, l));
    }
  for (int j = 0; j <= nye; ++j)
    for (int i = 0; i <= nxe; ++i) back.push_back(idx(i, j, 0));
  auto& top_side = m.side_sets["top_load"];
  for (int l = 0; l < nz; ++l)
    for (int i = 0; i < nxe; ++i) top_side.push_back({(l * nye + (nye - 1)) * nxe + i, 4});
  for (auto& [name, v] : m.node_sets) std::sort(v.begin(), v.end());
  m.node_sets["point_A"] = {nearest_node(m, Point3(0.0, s.height, 0.0))};
  validate(m);
  return m;
}

void validate(const Mesh& mesh) {
  const int nn = static_cast<int>(mesh.nodes.size());
  for (const auto& p : mesh.nodes)
    if (!p.allFinite()) throw MeshError("mesh: non-finite node coordinate");
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    for (int a : mesh.elements[e])
      if (a < 0 || a >= nn) throw MeshError("mesh: element " + std::to_string(e) + " references a missing node");
  for (const auto& [name, v] : mesh.node_sets) {
    std::set<int> seen;
    for (int a : v) {
      if (a < 0 || a >= nn) throw MeshError("mesh: node set '" + name + "' index out of range");
      if (!seen.insert(a).second) throw MeshError("mesh: node set '" + name + "' has duplicates");
    }
  }
  for (const auto& [name, v] : mesh.side_sets)
    for (const auto& [e, f] : v)
      if (e < 0 || e >= static_cast<int>(mesh.elements.size()) || f < 0 || f > 5)
        throw MeshError("mesh: side set '" + name + "' entry out of range");
  if (mesh.elements.empty()) return;
  const double jmin = min_jacobian(mesh);
  if (!(jmin > 0.0)) throw MeshError("mesh: non-positive Jacobian determinant");
}

double min_jacobian(const Mesh& mesh) {
  double jmin = std::numeric_limits<double>::infinity();
  for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e)
    for (const auto& g : hex8::gauss_shapes()) jmin = std::min(jmin, jacobian(mesh, e, g.dN).determinant());
  return jmin;
}

double element_volume(const Mesh& mesh, int e) {
  double v = 0.0;
  for (const auto& g : hex8::gauss_shapes()) v += jacobian(mesh, e, g.dN).determinant();
  return v;
}

double quadrature_volume(const Mesh& mesh) {
  double v = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) v += element_volume(mesh, e);
  return v;
}

int nearest_node(const Mesh& mesh, const Point3& p) {
  int best = -1;
  double dbest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(mesh.nodes.size()); ++i) {
    const double d = (mesh.nodes[static_cast<std::size_t>(i)] - p).squaredNorm();
    if (d < dbest) {
      dbest = d;
      best = i;
    }
  }
  if (best < 0) throw MeshError("nearest_node: empty mesh");
  return best;
}

std::vector<std::vector<int>> node_to_elements(const Mesh& mesh) {
  std::vector<std::vector<int>> adj(mesh.nodes.size());
  for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e)
    for (int a : mesh.elements[e]) {
      auto& v = adj[static_cast<std::size_t>(a)];
      if (v.empty() || v.back() != e) v.push_back(e);
    }
  return adj;
}

std::string mesh_to_json(const Mesh& mesh) {
  json j;
  j["nodes"] = json::array();
  for (const auto& p : mesh.nodes) j["nodes"].push_back({p.x(), p.y(), p.z()});
  j["elements"] = mesh.elements;
  j["node_sets"] = mesh.node_sets;
  json sides = json::object();
  for (const auto& [name, v] : mesh.side_sets) {
    json arr = json::array();
    for (const auto& [e, f] : v) arr.push_back({e, f});
    sides[name] = arr;
  }
  j["side_sets"] = sides;
  return j.dump();
}

Mesh mesh_from_json(const std::string& text) {
  Mesh m;
  try {
    const json j = json::parse(text);
    for (const auto& p : j.at("nodes")) m.nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    m.elements = j.at("elements").get<std::vector<Hex>>();
    if (j.contains("node_sets")) m.node_sets = j.at("node_sets").get<std::map<std::string, std::vector<int>>>();
    if (j.contains("side_sets"))
      for (const auto& [name, arr] : j.at("side_sets").items())
        for (const auto& ef : arr) m.side_sets[name].push_back({ef.at(0).get<int>(), ef.at(1).get<int>()});
  } catch (const json::exception& ex) {
    throw MeshError(std::string("mesh file: ") + ex.what());
  }
  validate(m);
  return m;
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str());
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  out << mesh_to_json(mesh) << '\n';
}

DofMap::DofMap(std::size_t num_nodes, std::vector<Dirichlet> dirichlet)
    : ndofs_(static_cast<Index>(kDofsPerNode * num_nodes)) {
  std::map<Index, double> merged;
  for (const auto& d : dirichlet) {
    if (d.dof < 0 || d.dof >= ndofs_) throw MeshError("Dirichlet DOF out of range");
    auto [it, inserted] = merged.emplace(d.dof, d.value);
    if (!inserted && it->second != d.value) throw MeshError("conflicting Dirichlet values on one DOF");
  }
  for (const auto& [dof, v] : merged) dirichlet_.push_back({dof, v});
  to_free_.assign(static_cast<std::size_t>(ndofs_), 0);
  for (const auto& d : dirichlet_) to_free_[static_cast<std::size_t>(d.dof)] = -1;
  for (Index i = 0; i < ndofs_; ++i) {
    if (to_free_[static_cast<std::size_t>(i)] < 0) continue;
    to_free_[static_cast<std::size_t>(i)] = static_cast<Index>(free_.size());
    free_.push_back(i);
  }
}

Vec DofMap::expand(const Vec& free, double lambda) const {
  Vec full = Vec::Zero(ndofs_);
  for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = free[static_cast<Index>(i)];
  for (const auto& d : dirichlet_) full[d.dof] = lambda * d.value;
  return full;
}

Vec DofMap::restrict_free(const Vec& full) const {
  Vec v(nfree());
  for (std::size_t i = 0; i < free_.size(); ++i) v[static_cast<Index>(i)] = full[free_[i]];
  return v;
}

bool DofMap::has_nonzero_prescribed() const {
  return std::any_of(dirichlet_.begin(), dirichlet_.end(), [](const Dirichlet& d) { return d.value != 0.0; });
}

std::vector<Dirichlet> fix_component(const Mesh& mesh, const std::string& set, int comp, double value) {
  if (comp < 0 || comp >= kDofsPerNode) throw MeshError("fix_component: component out of range");
  std::vector<Dirichlet> out;
  for (int n : mesh.node_set(set)) out.push_back({DofMap::dof(n, comp), value});
  return out;
}

}  // namespace dpmor
