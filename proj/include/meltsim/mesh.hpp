#pragma once

// Line and quadrilateral meshes for the solver domains: interval, rectangle,
// annular shell, and the sphere-cylinder shell around a probe-shaped hull.
//
// Every family is a mapped tensor-product grid. The mesh keeps its parameter
// axes so that refinement places new nodes on the exact geometry (circle arcs
// stay circle arcs) and stays conforming without hanging nodes. Boundary
// refinement grades the layer of cells touching one boundary in the normal
// direction only: after k cycles the two innermost layers have equal
// thickness and each following layer doubles moving outward.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meltsim/common.hpp"

namespace meltsim {

enum class GridName { kHyperCube, kHyperRectangle, kHyperShell, kHemisphereCylinderShell };

inline std::string to_string(GridName g) {
  switch (g) {
    case GridName::kHyperCube: return "hyper_cube";
    case GridName::kHyperRectangle: return "hyper_rectangle";
    case GridName::kHyperShell: return "hyper_shell";
    case GridName::kHemisphereCylinderShell: return "hemisphere_cylinder_shell";
  }
  return "?";
}

inline GridName grid_name_from_string(const std::string &s) {
  if (s == "hyper_cube") return GridName::kHyperCube;
  if (s == "hyper_rectangle") return GridName::kHyperRectangle;
  if (s == "hyper_shell") return GridName::kHyperShell;
  if (s == "hemisphere_cylinder_shell") return GridName::kHemisphereCylinderShell;
  throw Error("unknown grid name '" + s + "'");
}

struct GridSpec {
  GridName name = GridName::kHyperCube;
  // hyper_cube: {x0, x1}; hyper_rectangle: {x0, y0, x1, y1};
  // hyper_shell: {r_inner, r_outer};
  // hemisphere_cylinder_shell: {R_nose, R_outer, L_body, L_outer}
  std::vector<double> sizes;
  int shell_angular_cells = 8;

  void validate() const {
    auto need = [&](std::size_t n) {
      if (sizes.size() != n)
        throw Error(to_string(name) + " expects " + std::to_string(n) + " sizes, got " +
                    std::to_string(sizes.size()));
    };
    switch (name) {
      case GridName::kHyperCube:
        need(2);
        if (!(sizes[0] < sizes[1])) throw Error("hyper_cube: x0 < x1 required");
        break;
      case GridName::kHyperRectangle:
        need(4);
        if (!(sizes[0] < sizes[2] && sizes[1] < sizes[3]))
          throw Error("hyper_rectangle: corners must satisfy x0 < x1 and y0 < y1");
        break;
      case GridName::kHyperShell:
        need(2);
        if (!(sizes[0] > 0.0 && sizes[0] < sizes[1]))
          throw Error("hyper_shell: 0 < r_inner < r_outer required");
        if (shell_angular_cells < 4) throw Error("hyper_shell: need at least 4 angular cells");
        break;
      case GridName::kHemisphereCylinderShell:
        need(4);
        if (!(sizes[0] > 0.0 && sizes[0] < sizes[1] && sizes[2] > 0.0 && sizes[2] < sizes[3]))
          throw Error("hemisphere_cylinder_shell: require 0 < R_nose < R_outer and 0 < L_body < L_outer");
        break;
    }
  }
};

struct BoundaryFace {
  std::array<int, 2> nodes{-1, -1};  // 1D faces are a single node
  int cell = -1;
  int boundary_id = -1;
};

struct FaceWithNormal {
  std::array<int, 2> nodes{-1, -1};
  int cell = -1;
  Vec2 center;
  Vec2 normal;  // unit, outward
  double measure = 0.0;  // length in 2D, 1 in 1D
};

struct Mesh {
  int dim = 1;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> cells;  // 1D cells use entries 0..1, rest -1
  std::vector<BoundaryFace> faces;
  int n_boundary_ids = 0;

  // Structured descriptor: parameter axes plus the accumulated rigid frame.
  GridSpec spec;
  std::vector<double> axis0, axis1;
  bool axis1_periodic = false;
  Affine2 frame;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int nodes_per_cell() const { return dim == 1 ? 2 : 4; }

  Vec2 cell_center(int c) const {
    const auto &cc = cells[static_cast<std::size_t>(c)];
    Vec2 s;
    int n = nodes_per_cell();
    for (int k = 0; k < n; ++k) s += nodes[static_cast<std::size_t>(cc[static_cast<std::size_t>(k)])];
    return s * (1.0 / n);
  }
};

namespace detail {

// Inner/outer hull of the sphere-cylinder shell, parameterized CCW by
// t in [0,5): right side, back, left side, nose-left arc, nose-right arc.
inline Vec2 probe_hull_point(double t, double radius, double length) {
  t = t - 5.0 * std::floor(t / 5.0);
  if (t < 1.0) return {radius, t * length};                         // right aft side
  if (t < 2.0) return {radius * (1.0 - 2.0 * (t - 1.0)), length};   // back
  if (t < 3.0) return {-radius, length * (1.0 - (t - 2.0))};        // left aft side
  if (t < 4.0) {
    double phi = kPi * (1.0 + 0.5 * (t - 3.0));                     // nose-left quarter
    return {radius * std::cos(phi), radius * std::sin(phi)};
  }
  double phi = kPi * (1.5 + 0.5 * (t - 4.0));                       // nose-right quarter
  return {radius * std::cos(phi), radius * std::sin(phi)};
}

inline int probe_segment_boundary_id(double t_mid) {
  t_mid = t_mid - 5.0 * std::floor(t_mid / 5.0);
  if (t_mid < 1.0) return 2;  // aft right
  if (t_mid < 2.0) return 4;  // back
  if (t_mid < 3.0) return 3;  // aft left
  if (t_mid < 4.0) return 0;  // nose left
  return 1;                   // nose right
}

inline Vec2 reference_point(const GridSpec &spec, double a, double b) {
  switch (spec.name) {
    case GridName::kHyperCube: return {a, 0.0};
    case GridName::kHyperRectangle: return {a, b};
    case GridName::kHyperShell: return {a * std::cos(b), a * std::sin(b)};
    case GridName::kHemisphereCylinderShell: {
      Vec2 inner = probe_hull_point(b, spec.sizes[0], spec.sizes[2]);
      Vec2 outer = probe_hull_point(b, spec.sizes[1], spec.sizes[3]);
      return inner + (outer - inner) * a;  // a in [0,1], normal direction
    }
  }
  return {};
}

}  // namespace detail

namespace mesh_ops {

// Rebuilds nodes/cells/faces from spec + axes + frame.
inline void build(Mesh &m) {
  m.nodes.clear();
  m.cells.clear();
  m.faces.clear();

  const GridSpec &spec = m.spec;
  if (m.dim == 1) {
    int n = static_cast<int>(m.axis0.size());
    m.nodes.reserve(static_cast<std::size_t>(n));
    for (double a : m.axis0) m.nodes.push_back(m.frame.apply(detail::reference_point(spec, a, 0.0)));
    for (int i = 0; i + 1 < n; ++i)
      m.cells.push_back({i, i + 1, -1, -1});
    m.faces.push_back({{0, -1}, 0, 0});
    m.faces.push_back({{n - 1, -1}, n - 2, 1});
    m.n_boundary_ids = 2;
    return;
  }

  const int n0 = static_cast<int>(m.axis0.size());
  const int n1 = static_cast<int>(m.axis1.size());
  const int cells1 = m.axis1_periodic ? n1 : n1 - 1;
  auto node_index = [&](int i, int j) { return (j % n1) * n0 + i; };

  m.nodes.reserve(static_cast<std::size_t>(n0 * n1));
  for (int j = 0; j < n1; ++j)
    for (int i = 0; i < n0; ++i)
      m.nodes.push_back(m.frame.apply(detail::reference_point(spec, m.axis0[static_cast<std::size_t>(i)],
                                                              m.axis1[static_cast<std::size_t>(j)])));

  for (int j = 0; j < cells1; ++j)
    for (int i = 0; i + 1 < n0; ++i)
      m.cells.push_back({node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1),
                         node_index(i, j + 1)});

  auto cell_index = [&](int i, int j) { return j * (n0 - 1) + i; };

  switch (spec.name) {
    case GridName::kHyperRectangle: {
      for (int j = 0; j + 1 < n1; ++j) {
        m.faces.push_back({{node_index(0, j), node_index(0, j + 1)}, cell_index(0, j), 0});
        m.faces.push_back({{node_index(n0 - 1, j), node_index(n0 - 1, j + 1)}, cell_index(n0 - 2, j), 2});
      }
      for (int i = 0; i + 1 < n0; ++i) {
        m.faces.push_back({{node_index(i, 0), node_index(i + 1, 0)}, cell_index(i, 0), 1});
        m.faces.push_back({{node_index(i, n1 - 1), node_index(i + 1, n1 - 1)}, cell_index(i, n1 - 2), 3});
      }
      m.n_boundary_ids = 4;
      break;
    }
    case GridName::kHyperShell: {
      for (int j = 0; j < cells1; ++j) {
        m.faces.push_back({{node_index(0, j), node_index(0, j + 1)}, cell_index(0, j), 0});
        m.faces.push_back({{node_index(n0 - 1, j), node_index(n0 - 1, j + 1)}, cell_index(n0 - 2, j), 1});
      }
      m.n_boundary_ids = 2;
      break;
    }
    case GridName::kHemisphereCylinderShell: {
      for (int j = 0; j < cells1; ++j) {
        double t_mid = 0.5 * (m.axis1[static_cast<std::size_t>(j)] +
                              (j + 1 < n1 ? m.axis1[static_cast<std::size_t>(j + 1)] : 5.0));
        m.faces.push_back(
            {{node_index(0, j), node_index(0, j + 1)}, cell_index(0, j), detail::probe_segment_boundary_id(t_mid)});
        m.faces.push_back({{node_index(n0 - 1, j), node_index(n0 - 1, j + 1)}, cell_index(n0 - 2, j), 5});
      }
      m.n_boundary_ids = 6;
      break;
    }
    default: throw Error("build: unexpected 2D grid");
  }
}

// Positive Jacobian at the 2x2 Gauss points of each quad.
inline void check_jacobians(const Mesh &m) {
  if (m.dim == 1) {
    for (const auto &c : m.cells)
      if (!(m.nodes[static_cast<std::size_t>(c[1])].x > m.nodes[static_cast<std::size_t>(c[0])].x))
        throw Error("degenerate line cell");
    return;
  }
  const double q = 1.0 / std::sqrt(3.0);
  for (const auto &c : m.cells) {
    Vec2 p[4];
    for (int k = 0; k < 4; ++k) p[k] = m.nodes[static_cast<std::size_t>(c[static_cast<std::size_t>(k)])];
    for (double xi : {-q, q})
      for (double eta : {-q, q}) {
        // bilinear map on [-1,1]^2 with corner order (0,0),(1,0),(1,1),(0,1)
        Vec2 dxi = (p[1] - p[0]) * (0.25 * (1 - eta)) + (p[2] - p[3]) * (0.25 * (1 + eta));
        Vec2 deta = (p[3] - p[0]) * (0.25 * (1 - xi)) + (p[2] - p[1]) * (0.25 * (1 + xi));
        double det = dxi.x * deta.y - dxi.y * deta.x;
        if (!(det > 0.0)) throw Error("non-positive quad Jacobian");
      }
  }
}

inline Mesh generate(const GridSpec &spec) {
  spec.validate();
  Mesh m;
  m.spec = spec;
  switch (spec.name) {
    case GridName::kHyperCube:
      m.dim = 1;
      m.axis0 = {spec.sizes[0], spec.sizes[1]};
      break;
    case GridName::kHyperRectangle:
      m.dim = 2;
      m.axis0 = {spec.sizes[0], spec.sizes[2]};
      m.axis1 = {spec.sizes[1], spec.sizes[3]};
      break;
    case GridName::kHyperShell: {
      m.dim = 2;
      m.axis0 = {spec.sizes[0], spec.sizes[1]};
      m.axis1_periodic = true;
      int na = spec.shell_angular_cells;
      for (int j = 0; j < na; ++j) m.axis1.push_back(2.0 * kPi * j / na);
      break;
    }
    case GridName::kHemisphereCylinderShell:
      m.dim = 2;
      m.axis0 = {0.0, 1.0};
      m.axis1 = {0.0, 1.0, 2.0, 3.0, 4.0};
      m.axis1_periodic = true;
      break;
  }
  build(m);
  check_jacobians(m);
  return m;
}

inline std::vector<double> bisect_all(const std::vector<double> &axis, bool periodic, double period) {
  std::vector<double> out;
  out.reserve(axis.size() * 2);
  for (std::size_t i = 0; i < axis.size(); ++i) {
    out.push_back(axis[i]);
    double next = (i + 1 < axis.size()) ? axis[i + 1] : (periodic ? axis[0] + period : axis[i]);
    if (i + 1 < axis.size() || periodic) out.push_back(0.5 * (axis[i] + next));
  }
  return out;
}

inline double axis_period(const Mesh &m) {
  return m.spec.name == GridName::kHyperShell ? 2.0 * kPi : 5.0;
}

inline Mesh refine_global(const Mesh &mesh, int cycles) {
  if (cycles < 0) throw Error("refine_global: cycles must be >= 0");
  Mesh m = mesh;
  for (int c = 0; c < cycles; ++c) {
    m.axis0 = bisect_all(m.axis0, false, 0.0);
    if (m.dim == 2) m.axis1 = bisect_all(m.axis1, m.axis1_periodic, axis_period(m));
  }
  build(m);
  check_jacobians(m);
  return m;
}

inline Mesh refine_boundary(const Mesh &mesh, int boundary_id, int cycles) {
  if (cycles < 0) throw Error("refine_boundary: cycles must be >= 0");
  // Map the boundary id to (axis, end). Only normal-extremal boundaries of the
  // tensor families are gradable.
  int axis = -1;
  bool at_front = true;
  switch (mesh.spec.name) {
    case GridName::kHyperCube:
      if (boundary_id == 0) { axis = 0; at_front = true; }
      else if (boundary_id == 1) { axis = 0; at_front = false; }
      break;
    case GridName::kHyperRectangle:
      if (boundary_id == 0) { axis = 0; at_front = true; }
      else if (boundary_id == 2) { axis = 0; at_front = false; }
      else if (boundary_id == 1) { axis = 1; at_front = true; }
      else if (boundary_id == 3) { axis = 1; at_front = false; }
      break;
    case GridName::kHyperShell:
      if (boundary_id == 0) { axis = 0; at_front = true; }
      else if (boundary_id == 1) { axis = 0; at_front = false; }
      break;
    case GridName::kHemisphereCylinderShell:
      if (boundary_id >= 0 && boundary_id <= 4) { axis = 0; at_front = true; }
      else if (boundary_id == 5) { axis = 0; at_front = false; }
      break;
  }
  if (axis < 0)
    throw Error("refine_boundary: boundary id " + std::to_string(boundary_id) +
                " is not normal-extremal for " + to_string(mesh.spec.name));

  Mesh m = mesh;
  std::vector<double> &ax = (axis == 0) ? m.axis0 : m.axis1;
  for (int c = 0; c < cycles; ++c) {
    if (at_front) ax.insert(ax.begin() + 1, 0.5 * (ax[0] + ax[1]));
    else ax.insert(ax.end() - 1, 0.5 * (ax[ax.size() - 2] + ax[ax.size() - 1]));
  }
  build(m);
  check_jacobians(m);
  return m;
}

inline Mesh transform_rigid(const Mesh &mesh, double dtheta, const Vec2 &dr, const Vec2 &pivot) {
  if (mesh.dim == 1 && dtheta != 0.0) throw Error("transform_rigid: 1D meshes cannot rotate");
  Mesh m = mesh;
  m.frame = Affine2::rigid(dtheta, dr, pivot).compose(m.frame);
  build(m);
  if (m.dim == 2) check_jacobians(m);
  return m;
}

inline std::vector<FaceWithNormal> boundary_faces(const Mesh &m, int boundary_id) {
  if (boundary_id < 0 || boundary_id >= m.n_boundary_ids)
    throw Error("unknown boundary id " + std::to_string(boundary_id));
  std::vector<FaceWithNormal> out;
  for (const BoundaryFace &f : m.faces) {
    if (f.boundary_id != boundary_id) continue;
    FaceWithNormal fn;
    fn.nodes = f.nodes;
    fn.cell = f.cell;
    if (m.dim == 1) {
      fn.center = m.nodes[static_cast<std::size_t>(f.nodes[0])];
      fn.measure = 1.0;
      fn.normal = {fn.center.x > m.cell_center(f.cell).x ? 1.0 : -1.0, 0.0};
    } else {
      Vec2 a = m.nodes[static_cast<std::size_t>(f.nodes[0])];
      Vec2 b = m.nodes[static_cast<std::size_t>(f.nodes[1])];
      fn.center = (a + b) * 0.5;
      fn.measure = (b - a).norm();
      Vec2 n = perp(b - a);
      if (n.dot(fn.center - m.cell_center(f.cell)) < 0.0) n = -n;
      fn.normal = n * (1.0 / n.norm());
    }
    out.push_back(fn);
  }
  return out;
}

}  // namespace mesh_ops

}  // namespace meltsim
