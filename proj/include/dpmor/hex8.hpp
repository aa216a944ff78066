#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace dpmor::hex8 {

using Mat83 = Eigen::Matrix<double, 8, 3>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

// Reference coordinates of the eight corners. Bottom face (zeta = -1) first,
// counter-clockwise seen from +zeta.
inline constexpr std::array<std::array<double, 3>, 8> kNodeXi = {{{-1, -1, -1},
                                                                  {1, -1, -1},
                                                                  {1, 1, -1},
                                                                  {-1, 1, -1},
                                                                  {-1, -1, 1},
                                                                  {1, -1, 1},
                                                                  {1, 1, 1},
                                                                  {-1, 1, 1}}};

// Local faces: 0 zeta-, 1 zeta+, 2 eta-, 3 xi+, 4 eta+, 5 xi-. Node lists are
// ordered so the normal points out of the element.
inline constexpr std::array<std::array<int, 4>, 6> kFaceNodes = {{{0, 3, 2, 1},
                                                                   {4, 5, 6, 7},
                                                                   {0, 1, 5, 4},
                                                                   {1, 2, 6, 5},
                                                                   {2, 3, 7, 6},
                                                                   {3, 0, 4, 7}}};

struct ShapeEval {
  Vec8 N;
  Mat83 dN;  // derivatives with respect to (xi, eta, zeta)
};

inline ShapeEval shape_functions(const Eigen::Vector3d& xi) {
  ShapeEval s;
  for (int a = 0; a < 8; ++a) {
    const double xa = kNodeXi[a][0], ya = kNodeXi[a][1], za = kNodeXi[a][2];
    const double fx = 1.0 + xa * xi[0], fy = 1.0 + ya * xi[1], fz = 1.0 + za * xi[2];
    s.N[a] = 0.125 * fx * fy * fz;
    s.dN(a, 0) = 0.125 * xa * fy * fz;
    s.dN(a, 1) = 0.125 * ya * fx * fz;
    s.dN(a, 2) = 0.125 * za * fx * fy;
  }
  return s;
}

/// 2x2x2 Gauss rule; every weight is one.
inline const std::array<Eigen::Vector3d, 8>& gauss_points() {
  static const std::array<Eigen::Vector3d, 8> pts = [] {
    std::array<Eigen::Vector3d, 8> p;
    const double g = 1.0 / std::sqrt(3.0);
    for (int a = 0; a < 8; ++a) p[a] = Eigen::Vector3d(kNodeXi[a][0], kNodeXi[a][1], kNodeXi[a][2]) * g;
    return p;
  }();
  return pts;
}

/// Shape functions tabulated once at the Gauss points.
inline const std::array<ShapeEval, 8>& gauss_shapes() {
  static const std::array<ShapeEval, 8> tab = [] {
    std::array<ShapeEval, 8> t;
    for (int q = 0; q < 8; ++q) t[q] = shape_functions(gauss_points()[q]);
    return t;
  }();
  return tab;
}

/// Bilinear quad shape functions on a face, 2x2 rule.
struct FacePoint {
  std::array<double, 4> N;
  std::array<std::array<double, 2>, 4> dN;
};

inline const std::array<FacePoint, 4>& face_gauss() {
  static const std::array<FacePoint, 4> tab = [] {
    std::array<FacePoint, 4> t;
    const double g = 1.0 / std::sqrt(3.0);
    const double cs[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (int q = 0; q < 4; ++q) {
      const double s = cs[q][0] * g, r = cs[q][1] * g;
      for (int a = 0; a < 4; ++a) {
        t[q].N[a] = 0.25 * (1 + cs[a][0] * s) * (1 + cs[a][1] * r);
        t[q].dN[a][0] = 0.25 * cs[a][0] * (1 + cs[a][1] * r);
        t[q].dN[a][1] = 0.25 * cs[a][1] * (1 + cs[a][0] * s);
      }
    }
    return t;
  }();
  return tab;
}

}  // namespace dpmor::hex8
