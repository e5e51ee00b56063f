#pragma once

// Element-wise assembly of the mass, convection and diffusion matrices and
// the right-hand side on bilinear quads / linear line elements, plus strong
// boundary conditions via a lifting of the Dirichlet data (the system is
// reduced to the homogeneous problem and the prescribed values are restored
// in the recovered solution).

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "meltsim/linsolve.hpp"
#include "meltsim/mesh.hpp"

namespace meltsim {

using ScalarFn = std::function<double(const Vec2 &)>;
using VelocityFn = std::function<Vec2(const Vec2 &)>;
using SpaceTimeFn = std::function<double(const Vec2 &, double)>;

struct FeSpace {
  std::shared_ptr<const Mesh> mesh;
  int quadrature_points = 2;  // Gauss points per direction

  explicit FeSpace(std::shared_ptr<const Mesh> m) : mesh(std::move(m)) {
    if (!mesh) throw Error("FeSpace: null mesh");
  }

  int n_dofs() const { return mesh->n_nodes(); }
};

struct SparseSystem {
  CsrMatrix A;
  std::vector<double> rhs;
  std::vector<std::uint8_t> dirichlet;  // 1 where the dof is prescribed
  std::vector<double> dirichlet_values;

  // Overwrites prescribed dofs with their recorded values, so the recovered
  // solution matches the boundary data exactly at nodes.
  void restore_dirichlet(std::vector<double> &x) const {
    for (std::size_t i = 0; i < dirichlet.size(); ++i)
      if (dirichlet[i]) x[i] = dirichlet_values[i];
  }
};

namespace assembly {

inline void gauss_rule(int npts, std::vector<double> &pts, std::vector<double> &wts) {
  switch (npts) {
    case 1: pts = {0.0}; wts = {2.0}; return;
    case 2: {
      double q = 1.0 / std::sqrt(3.0);
      pts = {-q, q};
      wts = {1.0, 1.0};
      return;
    }
    case 3: {
      double q = std::sqrt(3.0 / 5.0);
      pts = {-q, 0.0, q};
      wts = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      return;
    }
    default: throw Error("gauss_rule: unsupported point count");
  }
}

// Geometry and basis data at the quadrature points of one cell.
struct ElementData {
  int n_nodes = 0;
  std::vector<Vec2> qpoints;             // physical coordinates
  std::vector<double> jxw;               // weight times |J|
  std::vector<std::array<double, 4>> shape;      // [q][a]
  std::vector<std::array<Vec2, 4>> shape_grad;   // [q][a], physical gradient
};

inline ElementData element_data(const Mesh &m, int cell, int npts) {
  std::vector<double> pts, wts;
  gauss_rule(npts, pts, wts);
  ElementData ed;
  const auto &c = m.cells[static_cast<std::size_t>(cell)];

  if (m.dim == 1) {
    ed.n_nodes = 2;
    Vec2 p0 = m.nodes[static_cast<std::size_t>(c[0])], p1 = m.nodes[static_cast<std::size_t>(c[1])];
    double J = 0.5 * (p1.x - p0.x);
    if (!(J > 0.0)) throw Error("element_data: degenerate line cell");
    for (std::size_t q = 0; q < pts.size(); ++q) {
      double xi = pts[q];
      ed.qpoints.push_back({0.5 * (1 - xi) * p0.x + 0.5 * (1 + xi) * p1.x, 0.0});
      ed.jxw.push_back(wts[q] * J);
      ed.shape.push_back({0.5 * (1 - xi), 0.5 * (1 + xi), 0, 0});
      ed.shape_grad.push_back({Vec2{-0.5 / J, 0}, Vec2{0.5 / J, 0}, Vec2{}, Vec2{}});
    }
    return ed;
  }

  ed.n_nodes = 4;
  Vec2 p[4];
  for (int k = 0; k < 4; ++k) p[k] = m.nodes[static_cast<std::size_t>(c[static_cast<std::size_t>(k)])];
  const double xi_k[4] = {-1, 1, 1, -1};
  const double eta_k[4] = {-1, -1, 1, 1};
  for (std::size_t qi = 0; qi < pts.size(); ++qi)
    for (std::size_t qj = 0; qj < pts.size(); ++qj) {
      double xi = pts[qi], eta = pts[qj];
      std::array<double, 4> sh{};
      std::array<double, 4> dxi{}, deta{};
      Vec2 x{}, t_xi{}, t_eta{};
      for (int k = 0; k < 4; ++k) {
        sh[static_cast<std::size_t>(k)] = 0.25 * (1 + xi * xi_k[k]) * (1 + eta * eta_k[k]);
        dxi[static_cast<std::size_t>(k)] = 0.25 * xi_k[k] * (1 + eta * eta_k[k]);
        deta[static_cast<std::size_t>(k)] = 0.25 * eta_k[k] * (1 + xi * xi_k[k]);
        x += p[k] * sh[static_cast<std::size_t>(k)];
        t_xi += p[k] * dxi[static_cast<std::size_t>(k)];
        t_eta += p[k] * deta[static_cast<std::size_t>(k)];
      }
      double det = t_xi.x * t_eta.y - t_xi.y * t_eta.x;
      if (!(det > 0.0)) throw Error("element_data: non-positive Jacobian");
      std::array<Vec2, 4> grads{};
      for (int k = 0; k < 4; ++k) {
        // grad = J^{-T} * (dxi, deta)
        grads[static_cast<std::size_t>(k)] = {
            (t_eta.y * dxi[static_cast<std::size_t>(k)] - t_xi.y * deta[static_cast<std::size_t>(k)]) / det,
            (-t_eta.x * dxi[static_cast<std::size_t>(k)] + t_xi.x * deta[static_cast<std::size_t>(k)]) / det};
      }
      ed.qpoints.push_back(x);
      ed.jxw.push_back(wts[qi] * wts[qj] * det);
      ed.shape.push_back(sh);
      ed.shape_grad.push_back(grads);
    }
  return ed;
}

inline CsrMatrix build_pattern(const Mesh &m) {
  const int n = m.n_nodes();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  const int npc = m.nodes_per_cell();
  for (const auto &c : m.cells)
    for (int a = 0; a < npc; ++a)
      for (int b = 0; b < npc; ++b)
        adj[static_cast<std::size_t>(c[static_cast<std::size_t>(a)])].push_back(c[static_cast<std::size_t>(b)]);
  CsrMatrix M;
  M.n = n;
  M.row_offsets.push_back(0);
  for (int i = 0; i < n; ++i) {
    auto &row = adj[static_cast<std::size_t>(i)];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (int j : row) M.cols.push_back(j);
    M.row_offsets.push_back(static_cast<int>(M.cols.size()));
  }
  M.values.assign(M.cols.size(), 0.0);
  return M;
}

inline void scatter(CsrMatrix &M, const std::array<int, 4> &dofs, int n_nodes,
                    const double local[4][4]) {
  for (int a = 0; a < n_nodes; ++a)
    for (int b = 0; b < n_nodes; ++b)
      M.at(dofs[static_cast<std::size_t>(a)], dofs[static_cast<std::size_t>(b)]) += local[a][b];
}

inline CsrMatrix build_mass(const FeSpace &sp) {
  const Mesh &m = *sp.mesh;
  CsrMatrix M = build_pattern(m);
  for (int cell = 0; cell < m.n_cells(); ++cell) {
    ElementData ed = element_data(m, cell, sp.quadrature_points);
    double local[4][4] = {};
    for (std::size_t q = 0; q < ed.jxw.size(); ++q)
      for (int a = 0; a < ed.n_nodes; ++a)
        for (int b = 0; b < ed.n_nodes; ++b)
          local[a][b] += ed.shape[q][static_cast<std::size_t>(a)] *
                         ed.shape[q][static_cast<std::size_t>(b)] * ed.jxw[q];
    scatter(M, m.cells[static_cast<std::size_t>(cell)], ed.n_nodes, local);
  }
  return M;
}

// Combined convection + diffusion matrix assembled in one sweep.
inline CsrMatrix build_convection_diffusion(const FeSpace &sp, const VelocityFn &velocity,
                                            const ScalarFn &alpha) {
  const Mesh &m = *sp.mesh;
  CsrMatrix M = build_pattern(m);
  for (int cell = 0; cell < m.n_cells(); ++cell) {
    ElementData ed = element_data(m, cell, sp.quadrature_points);
    double local[4][4] = {};
    for (std::size_t q = 0; q < ed.jxw.size(); ++q) {
      Vec2 v = velocity ? velocity(ed.qpoints[q]) : Vec2{};
      double a_q = alpha(ed.qpoints[q]);
      if (!std::isfinite(a_q) || !std::isfinite(v.x) || !std::isfinite(v.y))
        throw Error("build_convection_diffusion: non-finite coefficient at quadrature point");
      for (int a = 0; a < ed.n_nodes; ++a)
        for (int b = 0; b < ed.n_nodes; ++b) {
          double conv = ed.shape[q][static_cast<std::size_t>(a)] *
                        v.dot(ed.shape_grad[q][static_cast<std::size_t>(b)]);
          double diff = a_q * ed.shape_grad[q][static_cast<std::size_t>(a)].dot(
                                  ed.shape_grad[q][static_cast<std::size_t>(b)]);
          local[a][b] += (conv + diff) * ed.jxw[q];
        }
    }
    scatter(M, m.cells[static_cast<std::size_t>(cell)], ed.n_nodes, local);
  }
  return M;
}

inline std::vector<double> build_rhs(const FeSpace &sp, const SpaceTimeFn &source,
                                     const std::vector<std::pair<int, SpaceTimeFn>> &neumann,
                                     double t) {
  const Mesh &m = *sp.mesh;
  std::vector<double> f(static_cast<std::size_t>(m.n_nodes()), 0.0);

  if (source) {
    for (int cell = 0; cell < m.n_cells(); ++cell) {
      ElementData ed = element_data(m, cell, sp.quadrature_points);
      const auto &dofs = m.cells[static_cast<std::size_t>(cell)];
      for (std::size_t q = 0; q < ed.jxw.size(); ++q) {
        double s = source(ed.qpoints[q], t);
        for (int a = 0; a < ed.n_nodes; ++a)
          f[static_cast<std::size_t>(dofs[static_cast<std::size_t>(a)])] +=
              ed.shape[q][static_cast<std::size_t>(a)] * s * ed.jxw[q];
      }
    }
  }

  for (const auto &[id, h] : neumann) {
    for (const FaceWithNormal &face : mesh_ops::boundary_faces(m, id)) {
      if (m.dim == 1) {
        f[static_cast<std::size_t>(face.nodes[0])] += h(face.center, t);
        continue;
      }
      Vec2 a = m.nodes[static_cast<std::size_t>(face.nodes[0])];
      Vec2 b = m.nodes[static_cast<std::size_t>(face.nodes[1])];
      std::vector<double> pts, wts;
      gauss_rule(sp.quadrature_points, pts, wts);
      double J = 0.5 * face.measure;
      for (std::size_t q = 0; q < pts.size(); ++q) {
        double s0 = 0.5 * (1 - pts[q]), s1 = 0.5 * (1 + pts[q]);
        Vec2 xq = a * s0 + b * s1;
        double hv = h(xq, t);
        f[static_cast<std::size_t>(face.nodes[0])] += s0 * hv * wts[q] * J;
        f[static_cast<std::size_t>(face.nodes[1])] += s1 * hv * wts[q] * J;
      }
    }
  }
  return f;
}

// Symmetric row/column elimination with right-hand-side correction. Multiple
// calls compose as long as each Dirichlet node appears in one call only.
inline void apply_dirichlet_lifting(SparseSystem &sys, const SpaceTimeFn &g,
                                    const std::vector<int> &boundary_ids, const Mesh &m,
                                    double t) {
  const int n = sys.A.n;
  if (sys.dirichlet.empty()) {
    sys.dirichlet.assign(static_cast<std::size_t>(n), 0);
    sys.dirichlet_values.assign(static_cast<std::size_t>(n), 0.0);
  }

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
  for (int id : boundary_ids)
    for (const BoundaryFace &f : m.faces)
      if (f.boundary_id == id)
        for (int k = 0; k < 2; ++k)
          if (f.nodes[static_cast<std::size_t>(k)] >= 0) mask[static_cast<std::size_t>(f.nodes[static_cast<std::size_t>(k)])] = 1;

  std::vector<double> gval(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    if (mask[static_cast<std::size_t>(i)])
      gval[static_cast<std::size_t>(i)] = g(m.nodes[static_cast<std::size_t>(i)], t);

  for (int i = 0; i < n; ++i) {
    const bool row_dirichlet = mask[static_cast<std::size_t>(i)] != 0;
    double diag = 1.0;
    for (int k = sys.A.row_offsets[static_cast<std::size_t>(i)]; k < sys.A.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
      int j = sys.A.cols[static_cast<std::size_t>(k)];
      double &v = sys.A.values[static_cast<std::size_t>(k)];
      if (row_dirichlet) {
        if (j == i && v > 0.0) diag = v;
        if (j != i) v = 0.0;
      } else if (mask[static_cast<std::size_t>(j)]) {
        sys.rhs[static_cast<std::size_t>(i)] -= v * gval[static_cast<std::size_t>(j)];
        v = 0.0;
      }
    }
    if (row_dirichlet) {
      sys.A.at(i, i) = diag;
      sys.rhs[static_cast<std::size_t>(i)] = diag * gval[static_cast<std::size_t>(i)];
      sys.dirichlet[static_cast<std::size_t>(i)] = 1;
      sys.dirichlet_values[static_cast<std::size_t>(i)] = gval[static_cast<std::size_t>(i)];
    }
  }
}

}  // namespace assembly

}  // namespace meltsim
