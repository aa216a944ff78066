#include "dpmor/fem.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

namespace dpmor {

ElementGeometry element_geometry(const Mesh& mesh, int e) {
  ElementGeometry g;
  const auto& shapes = hex8::gauss_shapes();
  for (int q = 0; q < 8; ++q) {
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 8; ++a) J += mesh.nodes[mesh.elements[e][a]] * shapes[q].dN.row(a);
    const double det = J.determinant();
    if (!(det > 0.0)) throw MeshError("element " + std::to_string(e) + " has a non-positive Jacobian");
    g.wdetJ[q] = det;  // unit Gauss weights
    g.dNdX[q] = shapes[q].dN * J.inverse();
  }
  return g;
}

Vec32 ElementKernelOut::residual() const {
  Vec32 r;
  for (int a = 0; a < 8; ++a) {
    for (int i = 0; i < 3; ++i) r[4 * a + i] = r_u[3 * a + i];
    r[4 * a + 3] = r_dbar[a];
  }
  return r;
}

Mat32 ElementKernelOut::stiffness() const {
  Mat32 k;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) k(4 * a + i, 4 * b + j) = k_uu(3 * a + i, 3 * b + j);
        k(4 * a + i, 4 * b + 3) = k_udbar(3 * a + i, b);
        k(4 * a + 3, 4 * b + i) = k_dbaru(a, 3 * b + i);
      }
      k(4 * a + 3, 4 * b + 3) = k_dbardbar(a, b);
    }
  return k;
}

ElementKernelOut element_kernel(const ElementGeometry& geo, const Vec24& u, const hex8::Vec8& dbar,
                                const ElementStates& old, const MaterialParams& params, ElementStates& updated,
                                int elem_id) {
  ElementKernelOut out;
  out.r_u.setZero();
  out.r_dbar.setZero();
  out.p_u.setZero();
  out.k_uu.setZero();
  out.k_udbar.setZero();
  out.k_dbaru.setZero();
  out.k_dbardbar.setZero();

  const auto& shapes = hex8::gauss_shapes();
  Eigen::Matrix<double, 6, 24> B;
  for (int q = 0; q < 8; ++q) {
    const hex8::Mat83& dN = geo.dNdX[q];
    const hex8::Vec8& N = shapes[q].N;
    const double w = geo.wdetJ[q];

    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    for (int a = 0; a < 8; ++a) F += u.segment<3>(3 * a) * dN.row(a);
    const Mat3 C = F.transpose() * F;
    const double Dbar = N.dot(dbar);
    const Eigen::Vector3d gradDbar = dN.transpose() * dbar;

    GpResult res;
    try {
      res = gp_tangents(old[q], C, Dbar, params);
    } catch (const MaterialError& ex) {
      throw MaterialError("element " + std::to_string(elem_id) + ", gp " + std::to_string(q) + ": " + ex.what());
    }
    updated[q] = res.state;
    const GpResponse& g = res.response;

    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) {
        const int c = 3 * a + i;
        B(0, c) = F(i, 0) * dN(a, 0);
        B(1, c) = F(i, 1) * dN(a, 1);
        B(2, c) = F(i, 2) * dN(a, 2);
        B(3, c) = F(i, 0) * dN(a, 1) + F(i, 1) * dN(a, 0);
        B(4, c) = F(i, 1) * dN(a, 2) + F(i, 2) * dN(a, 1);
        B(5, c) = F(i, 0) * dN(a, 2) + F(i, 2) * dN(a, 0);
      }
    const Vec6 s = voigt_stress(g.S);
    out.r_u.noalias() += w * B.transpose() * s;
    out.k_uu.noalias() += w * B.transpose() * (g.dS_dE * B);
    const Eigen::Matrix<double, 8, 8> geom = dN * g.S * dN.transpose();
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        for (int i = 0; i < 3; ++i) out.k_uu(3 * a + i, 3 * b + i) += w * geom(a, b);

    out.r_dbar.noalias() += w * (params.A * (dN * gradDbar) - params.H * (g.D - Dbar) * N);
    out.k_dbardbar.noalias() +=
        w * (params.A * dN * dN.transpose() + params.H * (1.0 - g.dD_dDbar) * N * N.transpose());
    out.k_dbaru.noalias() += (-w * params.H) * N * (g.dD_dE.transpose() * B);
    out.k_udbar.noalias() += w * (B.transpose() * g.dS_dDbar) * N.transpose();
  }
  return out;
}

// --- Assembler -------------------------------------------------------------

Assembler::Assembler(const Mesh& mesh, const DofMap& dofs, const MaterialParams& params, int threads)
    : mesh_(mesh), dofs_(dofs), params_(params), threads_(std::max(1, threads)) {
  params_.validate();
  const int nel = static_cast<int>(mesh.num_elements());
  if (dofs.ndofs() != static_cast<Index>(kDofsPerNode * mesh.num_nodes()))
    throw MeshError("DOF map does not match the mesh");
  geo_.reserve(static_cast<std::size_t>(nel));
  edofs_.resize(static_cast<std::size_t>(nel));
  efree_.resize(static_cast<std::size_t>(nel));
  for (int e = 0; e < nel; ++e) {
    geo_.push_back(element_geometry(mesh, e));
    for (int a = 0; a < 8; ++a)
      for (int c = 0; c < kDofsPerNode; ++c) {
        const Index d = DofMap::dof(mesh.elements[e][a], c);
        edofs_[e][4 * a + c] = d;
        efree_[e][4 * a + c] = dofs.free_index(d);
      }
  }

  // Pattern: every (row, col) pair of free DOFs sharing an element.
  const Index n = dofs.nfree();
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(n));
  for (int e = 0; e < nel; ++e)
    for (int b = 0; b < 32; ++b) {
      const Index jb = efree_[e][b];
      if (jb < 0) continue;
      for (int a = 0; a < 32; ++a)
        if (efree_[e][a] >= 0) cols[static_cast<std::size_t>(jb)].push_back(static_cast<int>(efree_[e][a]));
    }
  std::vector<Eigen::Triplet<double, int>> trip;
  for (Index j = 0; j < n; ++j) {
    auto& v = cols[static_cast<std::size_t>(j)];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (int i : v) trip.emplace_back(i, static_cast<int>(j), 0.0);
  }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  scatter_.resize(static_cast<std::size_t>(nel));
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int e = 0; e < nel; ++e)
    for (int a = 0; a < 32; ++a)
      for (int b = 0; b < 32; ++b) {
        const Index i = efree_[e][a], j = efree_[e][b];
        int pos = -1;
        if (i >= 0 && j >= 0) {
          const int* lo = inner + outer[j];
          const int* hi = inner + outer[j + 1];
          pos = static_cast<int>(std::lower_bound(lo, hi, static_cast<int>(i)) - inner);
        }
        scatter_[e][32 * a + b] = pos;
      }

  node_elems_ = node_to_elements(mesh);
  old_.assign(static_cast<std::size_t>(nel), ElementStates{});
  trial_ = old_;
  dirty_.assign(static_cast<std::size_t>(nel), 0);
  rbuf_.resize(static_cast<std::size_t>(nel));
  kbuf_.resize(static_cast<std::size_t>(nel));
}

void Assembler::evaluate_elements(const Vec& U_full, const std::vector<int>& elems,
                                  const std::vector<ElementStates>& from, bool write_trial) {
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const int e = elems[t];
      Vec24 u;
      hex8::Vec8 dbar;
      for (int a = 0; a < 8; ++a) {
        for (int i = 0; i < 3; ++i) u[3 * a + i] = U_full[edofs_[e][4 * a + i]];
        dbar[a] = U_full[edofs_[e][4 * a + 3]];
      }
      ElementStates upd;
      const ElementKernelOut k = element_kernel(geo_[e], u, dbar, from[e], params_, upd, e);
      rbuf_[e] = k.residual();
      kbuf_[e] = k.stiffness();
      if (write_trial) trial_[e] = upd;
    }
  };
  const std::size_t ne = elems.size();
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads_), std::max<std::size_t>(ne, 1));
  if (nt <= 1) {
    work(0, ne);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (std::size_t t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        try {
          work(ne * t / nt, ne * (t + 1) / nt);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& ex : errs)
      if (ex) std::rethrow_exception(ex);
  }
  if (write_trial)
    for (int e : elems) dirty_[static_cast<std::size_t>(e)] = 1;
  last_evaluated_ = ne;
}

void Assembler::assemble(const Vec& U_full, Vec& R_full, SparseMatrix& K_free) {
  const int nel = static_cast<int>(mesh_.num_elements());
  std::vector<int> all(static_cast<std::size_t>(nel));
  for (int e = 0; e < nel; ++e) all[static_cast<std::size_t>(e)] = e;
  evaluate_elements(U_full, all, old_, true);

  R_full = Vec::Zero(dofs_.ndofs());
  K_free = pattern_;
  double* vals = K_free.valuePtr();
  for (int e = 0; e < nel; ++e) {
    const Mat32& k = kbuf_[e];
    const Vec32& r = rbuf_[e];
    const auto& sc = scatter_[e];
    for (int a = 0; a < 32; ++a) {
      R_full[edofs_[e][a]] += r[a];
      for (int b = 0; b < 32; ++b) {
        const int pos = sc[32 * a + b];
        if (pos >= 0) vals[pos] += k(a, b);
      }
    }
  }
}

std::vector<int> Assembler::adjacent_elements(const std::vector<Index>& free_rows) const {
  std::vector<int> out;
  const auto& fd = dofs_.free_dofs();
  for (Index r : free_rows) {
    if (r < 0 || r >= dofs_.nfree()) throw MeshError("selected row out of range");
    const int node = static_cast<int>(fd[static_cast<std::size_t>(r)] / kDofsPerNode);
    const auto& v = node_elems_[static_cast<std::size_t>(node)];
    out.insert(out.end(), v.begin(), v.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Assembler::assemble_selected(const Vec& U_full, const std::vector<Index>& free_rows, Vec& R_sel,
                                  RowBlock& K_rows) {
  const std::vector<int> elems = adjacent_elements(free_rows);
  if (elems.empty()) {
    last_evaluated_ = 0;
    R_sel = Vec::Zero(0);
    K_rows = RowBlock{{0}, {}, {}};
    return;
  }
  evaluate_elements(U_full, elems, old_, true);

  const std::size_t ns = free_rows.size();
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  K_rows.row_ptr.assign(ns + 1, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    const Index r = free_rows[s];
    K_rows.row_ptr[s + 1] = K_rows.row_ptr[s] + (outer[r + 1] - outer[r]);
  }
  K_rows.cols.resize(static_cast<std::size_t>(K_rows.row_ptr[ns]));
  K_rows.vals.assign(K_rows.cols.size(), 0.0);
  // The pattern is structurally symmetric, so column r lists row r's columns.
  for (std::size_t s = 0; s < ns; ++s) {
    const Index r = free_rows[s];
    std::copy(inner + outer[r], inner + outer[r + 1], K_rows.cols.begin() + K_rows.row_ptr[s]);
  }
  R_sel = Vec::Zero(static_cast<Index>(ns));

  std::vector<std::vector<std::size_t>> slots(static_cast<std::size_t>(dofs_.nfree()));
  for (std::size_t s = 0; s < ns; ++s) slots[static_cast<std::size_t>(free_rows[s])].push_back(s);

  for (int e : elems) {
    const Mat32& k = kbuf_[e];
    const Vec32& rv = rbuf_[e];
    for (int a = 0; a < 32; ++a) {
      const Index fa = efree_[e][a];
      if (fa < 0) continue;
      for (std::size_t s : slots[static_cast<std::size_t>(fa)]) {
        R_sel[static_cast<Index>(s)] += rv[a];
        const auto lo = K_rows.cols.begin() + K_rows.row_ptr[s];
        const auto hi = K_rows.cols.begin() + K_rows.row_ptr[s + 1];
        for (int b = 0; b < 32; ++b) {
          const Index fb = efree_[e][b];
          if (fb < 0) continue;
          const auto it = std::lower_bound(lo, hi, fb);
          K_rows.vals[static_cast<std::size_t>(it - K_rows.cols.begin())] += k(a, b);
        }
      }
    }
  }
}

SparseMatrix Assembler::linear_stiffness() const {
  SparseMatrix K = pattern_;
  double* vals = K.valuePtr();
  const ElementStates virgin{};
  const Vec24 u = Vec24::Zero();
  const hex8::Vec8 dbar = hex8::Vec8::Zero();
  for (int e = 0; e < static_cast<int>(mesh_.num_elements()); ++e) {
    ElementStates upd;
    const Mat32 k = element_kernel(geo_[e], u, dbar, virgin, params_, upd, e).stiffness();
    for (int a = 0; a < 32; ++a)
      for (int b = 0; b < 32; ++b) {
        const int pos = scatter_[e][32 * a + b];
        if (pos >= 0) vals[pos] += k(a, b);
      }
  }
  return K;
}

void Assembler::commit() {
  for (std::size_t e = 0; e < dirty_.size(); ++e)
    if (dirty_[e]) {
      old_[e] = trial_[e];
      dirty_[e] = 0;
    }
}

void Assembler::reset_states() {
  for (auto& s : old_) s = ElementStates{};
  trial_ = old_;
  std::fill(dirty_.begin(), dirty_.end(), 0);
}

Vec Assembler::surface_load(const std::string& side_set, const Eigen::Vector3d& total_force) const {
  Vec P = Vec::Zero(dofs_.ndofs());
  const auto& sides = mesh_.side_set(side_set);
  const auto& fg = hex8::face_gauss();
  struct Contribution {
    int node;
    double w;
  };
  std::vector<Contribution> acc;
  double area = 0.0;
  for (const auto& [e, f] : sides) {
    std::array<Point3, 4> X;
    std::array<int, 4> nodes;
    for (int a = 0; a < 4; ++a) {
      nodes[a] = mesh_.elements[e][hex8::kFaceNodes[f][a]];
      X[a] = mesh_.nodes[nodes[a]];
    }
    for (const auto& q : fg) {
      Point3 ds = Point3::Zero(), dr = Point3::Zero();
      for (int a = 0; a < 4; ++a) {
        ds += q.dN[a][0] * X[a];
        dr += q.dN[a][1] * X[a];
      }
      const double dA = ds.cross(dr).norm();
      area += dA;
      for (int a = 0; a < 4; ++a) acc.push_back({nodes[a], q.N[a] * dA});
    }
  }
  if (!(area > 0.0)) throw MeshError("side set '" + side_set + "' has zero area");
  const Eigen::Vector3d t = total_force / area;
  for (const auto& c : acc)
    for (int i = 0; i < 3; ++i) P[DofMap::dof(c.node, i)] += c.w * t[i];
  return P;
}

// --- FemModel --------------------------------------------------------------

FemModel::FemModel(Mesh mesh, DofMap dofs, const MaterialParams& params, const LoadSpec& load,
                   const MonitorSpec& monitor, int threads, const std::string& reaction_set, int reaction_component)
    : mesh_(std::move(mesh)), dofs_(std::move(dofs)), asm_(mesh_, dofs_, params, threads) {
  P0_full_ = load.side_set.empty() ? Vec::Zero(dofs_.ndofs()) : asm_.surface_load(load.side_set, load.total_force);
  P0_ = dofs_.restrict_free(P0_full_);
  load_mag_ = load.total_force.norm();
  const auto& mon = mesh_.node_set(monitor.node_set);
  if (mon.empty()) throw MeshError("monitor set '" + monitor.node_set + "' is empty");
  if (monitor.component < 0 || monitor.component >= kDofsPerNode) throw MeshError("monitor component out of range");
  monitor_dof_ = static_cast<int>(DofMap::dof(mon.front(), monitor.component));
  if (!reaction_set.empty())
    for (int n : mesh_.node_set(reaction_set)) reaction_dofs_.push_back(DofMap::dof(n, reaction_component));
}

void FemModel::evaluate(const Vec& x, double lambda, Vec& R, SparseMatrix& K) {
  const Vec U = dofs_.expand(x, lambda);
  Vec R_full;
  asm_.assemble(U, R_full, K);
  R = dofs_.restrict_free(R_full);
  last_reaction_ = 0.0;
  for (Index d : reaction_dofs_) last_reaction_ += R_full[d];
}

void FemModel::evaluate_rows(const Vec& x, double lambda, const std::vector<Index>& rows, Vec& R, RowBlock& K) {
  asm_.assemble_selected(dofs_.expand(x, lambda), rows, R, K);
}

double FemModel::monitor_u(const Vec& x, double lambda) const {
  const Index f = dofs_.free_index(monitor_dof_);
  if (f >= 0) return x[f];
  for (const auto& d : dofs_.dirichlet())
    if (d.dof == monitor_dof_) return lambda * d.value;
  return 0.0;
}

double FemModel::monitor_p(double lambda) const {
  if (!reaction_dofs_.empty()) return last_reaction_;
  return lambda * load_mag_;
}

// --- field output ----------------------------------------------------------

namespace {

void put_line(std::FILE* f, std::initializer_list<double> vals) {
  bool first = true;
  for (double v : vals) {
    std::fprintf(f, first ? "%.17g" : ",%.17g", v);
    first = false;
  }
  std::fputc('\n', f);
}

}  // namespace

void write_node_csv(const std::filesystem::path& path, const Mesh& mesh, const Vec& U_full,
                    const std::string& header_comment) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write " + path.string());
  if (!header_comment.empty()) std::fprintf(f, "# %s\n", header_comment.c_str());
  std::fprintf(f, "node,x,y,z,u_x,u_y,u_z,Dbar\n");
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    const auto& X = mesh.nodes[n];
    const Index d = static_cast<Index>(kDofsPerNode * n);
    put_line(f, {static_cast<double>(n), X.x(), X.y(), X.z(), U_full[d], U_full[d + 1], U_full[d + 2], U_full[d + 3]});
  }
  std::fclose(f);
}

void write_gp_csv(const std::filesystem::path& path, const std::vector<ElementStates>& states,
                  const std::string& header_comment) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write " + path.string());
  if (!header_comment.empty()) std::fprintf(f, "# %s\n", header_comment.c_str());
  std::fprintf(f, "element,gp,xi_p,xi_d,D\n");
  for (std::size_t e = 0; e < states.size(); ++e)
    for (int q = 0; q < 8; ++q)
      put_line(f, {static_cast<double>(e), static_cast<double>(q), states[e][q].xi_p, states[e][q].xi_d,
                   states[e][q].D});
  std::fclose(f);
}

}  // namespace dpmor
