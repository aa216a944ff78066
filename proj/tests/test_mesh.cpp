#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpmor/mesh.hpp"

#include <numbers>

using namespace dpmor;

namespace {

double plate_exact(const PlateSpec& s) {
  return (0.25 * s.width * s.height - 0.25 * std::numbers::pi * s.radius * s.radius) * s.thickness;
}

}  // namespace

TEST_CASE("plate: coarsest mesh is valid") {
  PlateSpec s;
  s.nx = s.ny = s.nr = s.nz = 1;
  const Mesh m = gen_plate_with_hole(s);
  CHECK(m.num_elements() > 0);
  CHECK(min_jacobian(m) > 0.0);
  CHECK_NOTHROW(validate(m));
  for (const char* name : {"sym_x", "sym_y", "back_z", "load_edge", "point_A"}) CHECK_FALSE(m.node_set(name).empty());
}

TEST_CASE("plate: default refinement gives the 152 element study size") {
  const Mesh m = gen_plate_with_hole(PlateSpec{});
  CHECK(m.num_elements() == 152);
  PlateSpec fine;
  fine.nx = 16;
  fine.ny = 22;
  fine.nr = 16;
  CHECK(gen_plate_with_hole(fine).num_elements() == 608);
}

TEST_CASE("plate: volume matches quarter plate minus quarter cylinder") {
  PlateSpec s;
  const double rel = std::abs(quadrature_volume(gen_plate_with_hole(s)) - plate_exact(s)) / plate_exact(s);
  CHECK(rel < 5e-3);
  // Refinement moves the polygonal hole closer to the circle.
  PlateSpec f = s;
  f.nx = 16;
  f.ny = 22;
  f.nr = 16;
  const double rel_f = std::abs(quadrature_volume(gen_plate_with_hole(f)) - plate_exact(f)) / plate_exact(f);
  CHECK(rel_f < rel);
}

TEST_CASE("plate: symmetry sets lie on their planes, load edge is planar") {
  const Mesh m = gen_plate_with_hole(PlateSpec{});
  for (int n : m.node_set("sym_x")) CHECK(std::abs(m.nodes[n].x()) < 1e-12);
  for (int n : m.node_set("sym_y")) CHECK(std::abs(m.nodes[n].y()) < 1e-12);
  for (int n : m.node_set("back_z")) CHECK(std::abs(m.nodes[n].z()) < 1e-12);
  for (int n : m.node_set("load_edge")) CHECK(m.nodes[n].y() == doctest::Approx(20.0));
  CHECK_FALSE(m.side_set("load_edge").empty());
  const Point3& a = m.nodes[m.node_set("point_A").front()];
  CHECK(a.x() == doctest::Approx(0.0));
  CHECK(a.y() == doctest::Approx(20.0));
}

TEST_CASE("plate: degenerate geometry is rejected") {
  PlateSpec s;
  s.radius = 12.0;
  CHECK_THROWS_AS(gen_plate_with_hole(s), MeshError);
  PlateSpec z;
  z.nx = 0;
  CHECK_THROWS_AS(gen_plate_with_hole(z), MeshError);
}

TEST_CASE("notched: validity, volume and loaded edge") {
  NotchedSpec s;
  s.refinement = 1;
  const Mesh m = gen_asym_notched(s);
  CHECK_NOTHROW(validate(m));
  const double exact = (s.width * s.height - std::numbers::pi * s.notch_radius * s.notch_radius) * s.thickness;
  const Mesh fine = gen_asym_notched(NotchedSpec{});
  CHECK(std::abs(quadrature_volume(fine) - exact) / exact < 5e-3);
  const auto& top = fine.node_set("top_load");
  REQUIRE_FALSE(top.empty());
  for (int n : top) CHECK(fine.nodes[n].y() == doctest::Approx(s.height));
  CHECK_FALSE(fine.node_set("bottom").empty());
}

TEST_CASE("notched: overlapping notches are rejected") {
  NotchedSpec s;
  s.notch_radius = 10.5;
  s.notch_offset = 0.0;
  CHECK_THROWS_AS(gen_asym_notched(s), MeshError);
}

TEST_CASE("quadrature volume: unit cube and stretched element") {
  CHECK(quadrature_volume(gen_box({})) == doctest::Approx(1.0).epsilon(1e-14));
  const Mesh m = gen_box({2.0, 1.0, 1.0, 1, 1, 1});
  CHECK(quadrature_volume(m) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(element_volume(m, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("validate: inverted element is rejected") {
  Mesh m = gen_box({});
  std::swap(m.elements[0][0], m.elements[0][4]);
  std::swap(m.elements[0][1], m.elements[0][5]);
  std::swap(m.elements[0][2], m.elements[0][6]);
  std::swap(m.elements[0][3], m.elements[0][7]);
  CHECK_THROWS_AS(validate(m), MeshError);
  Mesh bad = gen_box({});
  bad.elements[0][3] = 99;
  CHECK_THROWS_AS(validate(bad), MeshError);
}

TEST_CASE("node_to_elements on a 2x1x1 box") {
  const Mesh m = gen_box({2.0, 1.0, 1.0, 2, 1, 1});
  const auto n2e = node_to_elements(m);
  int shared = 0;
  for (const auto& l : n2e) shared += l.size() == 2;
  CHECK(shared == 4);
}

TEST_CASE("mesh json round trip") {
  const Mesh m = gen_plate_with_hole(PlateSpec{});
  const Mesh r = mesh_from_json(mesh_to_json(m));
  REQUIRE(r.num_nodes() == m.num_nodes());
  REQUIRE(r.num_elements() == m.num_elements());
  for (std::size_t i = 0; i < m.num_nodes(); ++i) CHECK(r.nodes[i] == m.nodes[i]);
  CHECK(r.elements == m.elements);
  CHECK(r.node_sets == m.node_sets);
  CHECK(r.side_sets == m.side_sets);
}

TEST_CASE("DofMap: expand and restrict") {
  const Mesh m = gen_box({});
  auto bc = fix_component(m, "x0", 0);
  const auto pulled = fix_component(m, "x1", 0, 0.1);
  bc.insert(bc.end(), pulled.begin(), pulled.end());
  const DofMap map(m.num_nodes(), bc);
  CHECK(map.ndofs() == 32);
  CHECK(map.nfree() == 24);
  CHECK(map.has_nonzero_prescribed());
  const Vec free = Vec::LinSpaced(24, 1.0, 24.0);
  const Vec full = map.expand(free, 2.0);
  CHECK((map.restrict_free(full) - free).norm() == 0.0);
  for (int n : m.node_set("x1")) CHECK(full[DofMap::dof(n, 0)] == doctest::Approx(0.2));
  for (int n : m.node_set("x0")) CHECK(map.free_index(DofMap::dof(n, 0)) == -1);
}
