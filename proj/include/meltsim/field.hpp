#pragma once

// A finite element field that can be sampled anywhere: inside the domain via
// point location and the nodal basis, outside via nearest-boundary-vertex
// extrapolation. Also owns the restart checkpoint format, legacy VTK output,
// and extraction of the T = level isoline (the phase-change interface).

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "meltsim/assembly.hpp"
#include "meltsim/mesh.hpp"
#include "meltsim/rigid_state.hpp"

namespace meltsim {

class PointNotFound : public Error {
public:
  explicit PointNotFound(const Vec2 &p)
      : Error("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the mesh") {}
};

namespace detail {

// Uniform bounding-box grid over the cells.
struct CellLocator {
  Vec2 lo, hi;
  int nx = 1, ny = 1;
  std::vector<std::vector<int>> bins;
  std::vector<int> boundary_vertices;  // sorted, unique

  explicit CellLocator(const Mesh &m) {
    lo = hi = m.nodes.at(0);
    for (const Vec2 &p : m.nodes) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
    double pad = 1e-12 + 1e-12 * std::max(hi.x - lo.x, hi.y - lo.y);
    lo.x -= pad;
    lo.y -= pad;
    hi.x += pad;
    hi.y += pad;
    int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.n_cells()))));
    nx = std::min(256, target);
    ny = m.dim == 1 ? 1 : nx;
    bins.assign(static_cast<std::size_t>(nx * ny), {});

    const int npc = m.nodes_per_cell();
    for (int c = 0; c < m.n_cells(); ++c) {
      Vec2 clo = m.nodes[static_cast<std::size_t>(m.cells[static_cast<std::size_t>(c)][0])];
      Vec2 chi = clo;
      for (int k = 1; k < npc; ++k) {
        Vec2 p = m.nodes[static_cast<std::size_t>(m.cells[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)])];
        clo.x = std::min(clo.x, p.x);
        clo.y = std::min(clo.y, p.y);
        chi.x = std::max(chi.x, p.x);
        chi.y = std::max(chi.y, p.y);
      }
      int i0 = bin_x(clo.x), i1 = bin_x(chi.x);
      int j0 = bin_y(clo.y), j1 = bin_y(chi.y);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) bins[static_cast<std::size_t>(j * nx + i)].push_back(c);
    }

    for (const BoundaryFace &f : m.faces)
      for (int k = 0; k < 2; ++k)
        if (f.nodes[static_cast<std::size_t>(k)] >= 0) boundary_vertices.push_back(f.nodes[static_cast<std::size_t>(k)]);
    std::sort(boundary_vertices.begin(), boundary_vertices.end());
    boundary_vertices.erase(std::unique(boundary_vertices.begin(), boundary_vertices.end()),
                            boundary_vertices.end());
  }

  int bin_x(double x) const {
    int i = static_cast<int>((x - lo.x) / (hi.x - lo.x) * nx);
    return std::clamp(i, 0, nx - 1);
  }
  int bin_y(double y) const {
    int j = static_cast<int>((y - lo.y) / (hi.y - lo.y) * ny);
    return std::clamp(j, 0, ny - 1);
  }

  const std::vector<int> &candidates(const Vec2 &p) const {
    return bins[static_cast<std::size_t>(bin_y(p.y) * nx + bin_x(p.x))];
  }
};

// Newton inversion of the bilinear map; returns false if the point is not in
// the cell (reference coordinates outside [-1,1] up to tolerance).
inline bool invert_bilinear(const Vec2 p[4], const Vec2 &x, double &xi, double &eta) {
  xi = 0.0;
  eta = 0.0;
  for (int it = 0; it < 30; ++it) {
    Vec2 r = p[0] * (0.25 * (1 - xi) * (1 - eta)) + p[1] * (0.25 * (1 + xi) * (1 - eta)) +
             p[2] * (0.25 * (1 + xi) * (1 + eta)) + p[3] * (0.25 * (1 - xi) * (1 + eta)) - x;
    if (std::abs(r.x) + std::abs(r.y) < 1e-14) break;
    Vec2 dxi = (p[1] - p[0]) * (0.25 * (1 - eta)) + (p[2] - p[3]) * (0.25 * (1 + eta));
    Vec2 deta = (p[3] - p[0]) * (0.25 * (1 - xi)) + (p[2] - p[1]) * (0.25 * (1 + xi));
    double det = dxi.x * deta.y - dxi.y * deta.x;
    if (det == 0.0) return false;
    double dxi_step = (deta.y * r.x - deta.x * r.y) / det;
    double deta_step = (-dxi.y * r.x + dxi.x * r.y) / det;
    xi -= dxi_step;
    eta -= deta_step;
    if (std::abs(dxi_step) + std::abs(deta_step) < 1e-12 && it > 0) break;
  }
  const double tol = 1e-10;
  return std::abs(xi) <= 1 + tol && std::abs(eta) <= 1 + tol;
}

}  // namespace detail

class FeField {
public:
  FeField(std::shared_ptr<const Mesh> mesh, std::vector<double> values)
      : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_) throw Error("FeField: null mesh");
    if (static_cast<int>(values_.size()) != mesh_->n_nodes())
      throw Error("FeField: dof count does not match node count");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error("FeField: non-finite dof value");
    locator_ = std::make_shared<detail::CellLocator>(*mesh_);
  }

  const Mesh &mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const std::vector<double> &values() const { return values_; }

  double eval_in_cell(int cell, const Vec2 &x) const {
    const auto &c = mesh_->cells[static_cast<std::size_t>(cell)];
    if (mesh_->dim == 1) {
      double x0 = mesh_->nodes[static_cast<std::size_t>(c[0])].x;
      double x1 = mesh_->nodes[static_cast<std::size_t>(c[1])].x;
      double s = (x.x - x0) / (x1 - x0);
      return (1 - s) * values_[static_cast<std::size_t>(c[0])] + s * values_[static_cast<std::size_t>(c[1])];
    }
    Vec2 p[4];
    for (int k = 0; k < 4; ++k) p[k] = mesh_->nodes[static_cast<std::size_t>(c[static_cast<std::size_t>(k)])];
    double xi, eta;
    if (!detail::invert_bilinear(p, x, xi, eta)) throw PointNotFound(x);
    // snap to the corners so nodal evaluation returns the dof value exactly
    auto snap = [](double v) { return std::abs(std::abs(v) - 1.0) < 1e-12 ? std::copysign(1.0, v) : v; };
    xi = snap(xi);
    eta = snap(eta);
    double sh[4] = {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                    0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
    double u = 0;
    for (int k = 0; k < 4; ++k) u += sh[k] * values_[static_cast<std::size_t>(c[static_cast<std::size_t>(k)])];
    return u;
  }

  int locate(const Vec2 &x) const {
    if (mesh_->dim == 1) {
      for (int c : locator_->candidates(x)) {
        const auto &cc = mesh_->cells[static_cast<std::size_t>(c)];
        double x0 = mesh_->nodes[static_cast<std::size_t>(cc[0])].x;
        double x1 = mesh_->nodes[static_cast<std::size_t>(cc[1])].x;
        double tol = 1e-12 * std::max(1.0, std::abs(x1 - x0));
        if (x.x >= x0 - tol && x.x <= x1 + tol) return c;
      }
      return -1;
    }
    for (int c : locator_->candidates(x)) {
      Vec2 p[4];
      const auto &cc = mesh_->cells[static_cast<std::size_t>(c)];
      for (int k = 0; k < 4; ++k) p[k] = mesh_->nodes[static_cast<std::size_t>(cc[static_cast<std::size_t>(k)])];
      double xi, eta;
      if (detail::invert_bilinear(p, x, xi, eta)) return c;
    }
    return -1;
  }

  double eval(const Vec2 &x) const {
    int c = locate(x);
    if (c < 0) throw PointNotFound(x);
    return eval_in_cell(c, x);
  }

  // Inside: eval. Outside: nodal value at the nearest boundary vertex
  // (Euclidean distance, ties broken by the lowest node index).
  double eval_extrapolated(const Vec2 &x) const {
    int c = locate(x);
    if (c >= 0) return eval_in_cell(c, x);
    return values_[static_cast<std::size_t>(nearest_boundary_vertex(x))];
  }

  int nearest_boundary_vertex(const Vec2 &x) const {
    double best = std::numeric_limits<double>::max();
    int best_node = -1;
    for (int v : locator_->boundary_vertices) {
      double d = (mesh_->nodes[static_cast<std::size_t>(v)] - x).norm_sq();
      if (d < best) {
        best = d;
        best_node = v;
      }
    }
    if (best_node < 0) throw Error("mesh has no boundary vertices");
    return best_node;
  }

private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<double> values_;
  std::shared_ptr<const detail::CellLocator> locator_;
};

inline double eval(const FeField &f, const Vec2 &x) { return f.eval(x); }
inline double eval_extrapolated(const FeField &f, const Vec2 &x) { return f.eval_extrapolated(x); }

// New field on the given space, sampled from the old one (with extrapolation
// where the new mesh sticks out of the old domain).
inline FeField init_from_field(const FeSpace &space, const FeField &old) {
  std::vector<double> vals(static_cast<std::size_t>(space.n_dofs()));
  for (int i = 0; i < space.n_dofs(); ++i)
    vals[static_cast<std::size_t>(i)] = old.eval_extrapolated(space.mesh->nodes[static_cast<std::size_t>(i)]);
  return FeField(space.mesh, std::move(vals));
}

// --------------------------------------------------------------------------
// Checkpoint v1: line-oriented text, doubles as hex floats for bit-exact
// round trips. Sections are length-prefixed.

namespace detail {

inline std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_double(const std::string &s) {
  char *end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw Error("checkpoint: malformed number '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_checkpoint(const FeField &f, const std::vector<RigidState> &rigid, double t,
                             const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open checkpoint for writing: " + path);
  const Mesh &m = f.mesh();
  os << "meltsim-checkpoint v1\n";
  os << "NODES " << m.n_nodes() << "\n";
  for (const Vec2 &p : m.nodes)
    os << detail::hex_double(p.x) << " " << detail::hex_double(p.y) << "\n";
  os << "CELLS " << m.n_cells() << "\n";
  for (const auto &c : m.cells) os << c[0] << " " << c[1] << " " << c[2] << " " << c[3] << "\n";
  os << "BOUNDARY " << m.faces.size() << "\n";
  for (const auto &bf : m.faces)
    os << bf.nodes[0] << " " << bf.nodes[1] << " " << bf.cell << " " << bf.boundary_id << "\n";
  // The manifold section carries the structured descriptor, which is what
  // refinement and rigid transforms need after a restart. The dimension is
  // implied by the grid family.
  os << "MANIFOLD 5\n";
  os << "grid " << to_string(m.spec.name) << " " << m.spec.shell_angular_cells << " "
     << m.spec.sizes.size();
  for (double s : m.spec.sizes) os << " " << detail::hex_double(s);
  os << "\n";
  os << "frame " << detail::hex_double(m.frame.r00) << " " << detail::hex_double(m.frame.r01) << " "
     << detail::hex_double(m.frame.r10) << " " << detail::hex_double(m.frame.r11) << " "
     << detail::hex_double(m.frame.d.x) << " " << detail::hex_double(m.frame.d.y) << "\n";
  os << "axis0 " << m.axis0.size();
  for (double a : m.axis0) os << " " << detail::hex_double(a);
  os << "\n";
  os << "axis1 " << m.axis1.size() << " " << (m.axis1_periodic ? 1 : 0);
  for (double a : m.axis1) os << " " << detail::hex_double(a);
  os << "\n";
  os << "nbids " << m.n_boundary_ids << "\n";
  os << "DOFS " << f.values().size() << "\n";
  for (double v : f.values()) os << detail::hex_double(v) << "\n";
  os << "RIGID_STATE " << rigid.size() << "\n";
  for (const RigidState &s : rigid)
    os << detail::hex_double(s.theta) << " " << detail::hex_double(s.r0) << " "
       << detail::hex_double(s.r1) << "\n";
  os << "TIME 1\n" << detail::hex_double(t) << "\n";
  if (!os) throw Error("write failure on checkpoint: " + path);
}

struct Checkpoint {
  FeField field;
  std::vector<RigidState> rigid;
  double time = 0.0;
};

inline Checkpoint read_checkpoint(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open checkpoint: " + path);
  std::string line;
  auto next_line = [&](const char *what) {
    if (!std::getline(is, line)) throw Error(std::string("checkpoint: truncated before ") + what);
    return line;
  };
  auto expect_section = [&](const std::string &name) {
    next_line(name.c_str());
    std::istringstream ss(line);
    std::string tag;
    long count = -1;
    ss >> tag >> count;
    if (tag != name || count < 0)
      throw Error("checkpoint: malformed section header '" + line + "', expected " + name);
    return count;
  };

  next_line("header");
  if (line != "meltsim-checkpoint v1") {
    if (line.rfind("meltsim-checkpoint", 0) == 0) throw Error("checkpoint: version mismatch: " + line);
    throw Error("checkpoint: bad magic line");
  }

  Mesh m;
  long n_nodes = expect_section("NODES");
  for (long i = 0; i < n_nodes; ++i) {
    std::istringstream ss(next_line("node"));
    std::string a, b;
    if (!(ss >> a >> b)) throw Error("checkpoint: malformed node line");
    m.nodes.push_back({detail::parse_double(a), detail::parse_double(b)});
  }
  long n_cells = expect_section("CELLS");
  for (long i = 0; i < n_cells; ++i) {
    std::istringstream ss(next_line("cell"));
    std::array<int, 4> c{};
    if (!(ss >> c[0] >> c[1] >> c[2] >> c[3])) throw Error("checkpoint: malformed cell line");
    m.cells.push_back(c);
  }
  long n_faces = expect_section("BOUNDARY");
  int max_id = -1;
  for (long i = 0; i < n_faces; ++i) {
    std::istringstream ss(next_line("face"));
    BoundaryFace f;
    if (!(ss >> f.nodes[0] >> f.nodes[1] >> f.cell >> f.boundary_id))
      throw Error("checkpoint: malformed boundary line");
    max_id = std::max(max_id, f.boundary_id);
    m.faces.push_back(f);
  }
  m.n_boundary_ids = max_id + 1;

  long n_manifold = expect_section("MANIFOLD");
  for (long i = 0; i < n_manifold; ++i) {
    std::istringstream ss(next_line("manifold"));
    std::string tag;
    ss >> tag;
    if (tag == "grid") {
      std::string name;
      std::size_t n_sizes = 0;
      ss >> name >> m.spec.shell_angular_cells >> n_sizes;
      m.spec.name = grid_name_from_string(name);
      m.dim = m.spec.name == GridName::kHyperCube ? 1 : 2;
      for (std::size_t k = 0; k < n_sizes; ++k) {
        std::string v;
        if (!(ss >> v)) throw Error("checkpoint: malformed grid line");
        m.spec.sizes.push_back(detail::parse_double(v));
      }
    } else if (tag == "frame") {
      std::string a[6];
      if (!(ss >> a[0] >> a[1] >> a[2] >> a[3] >> a[4] >> a[5]))
        throw Error("checkpoint: malformed frame line");
      m.frame.r00 = detail::parse_double(a[0]);
      m.frame.r01 = detail::parse_double(a[1]);
      m.frame.r10 = detail::parse_double(a[2]);
      m.frame.r11 = detail::parse_double(a[3]);
      m.frame.d = {detail::parse_double(a[4]), detail::parse_double(a[5])};
    } else if (tag == "axis0" || tag == "axis1") {
      std::size_t count = 0;
      ss >> count;
      int periodic = 0;
      if (tag == "axis1") ss >> periodic;
      std::vector<double> &axis = (tag == "axis0") ? m.axis0 : m.axis1;
      for (std::size_t k = 0; k < count; ++k) {
        std::string v;
        if (!(ss >> v)) throw Error("checkpoint: malformed axis line");
        axis.push_back(detail::parse_double(v));
      }
      if (tag == "axis1") m.axis1_periodic = periodic != 0;
    } else if (tag == "nbids") {
      ss >> m.n_boundary_ids;
    } else {
      throw Error("checkpoint: unknown manifold entry '" + tag + "'");
    }
  }

  long n_dofs = expect_section("DOFS");
  if (n_dofs != n_nodes) throw Error("checkpoint: dof count does not match node count");
  std::vector<double> dofs;
  for (long i = 0; i < n_dofs; ++i) dofs.push_back(detail::parse_double(next_line("dof")));

  long n_rigid = expect_section("RIGID_STATE");
  std::vector<RigidState> rigid;
  for (long i = 0; i < n_rigid; ++i) {
    std::istringstream ss(next_line("rigid state"));
    std::string a, b, c;
    if (!(ss >> a >> b >> c)) throw Error("checkpoint: malformed rigid state line");
    rigid.push_back({detail::parse_double(a), detail::parse_double(b), detail::parse_double(c)});
  }

  if (expect_section("TIME") != 1) throw Error("checkpoint: TIME section must hold one value");
  double t = detail::parse_double(next_line("time"));

  return Checkpoint{FeField(std::make_shared<Mesh>(std::move(m)), std::move(dofs)), std::move(rigid), t};
}

// --------------------------------------------------------------------------
// Legacy VTK ASCII output (viewable in ParaView).

inline void export_vtk(const FeField &f, const std::string &path, double t) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open VTK file for writing: " + path);
  const Mesh &m = f.mesh();
  os.precision(17);
  os << "# vtk DataFile Version 2.0\n";
  os << "meltsim solution\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "FIELD FieldData 1\n";
  os << "time 1 1 double\n" << t << "\n";
  os << "POINTS " << m.n_nodes() << " double\n";
  for (const Vec2 &p : m.nodes) os << p.x << " " << p.y << " 0\n";
  const int npc = m.nodes_per_cell();
  os << "CELLS " << m.n_cells() << " " << m.n_cells() * (npc + 1) << "\n";
  for (const auto &c : m.cells) {
    os << npc;
    for (int k = 0; k < npc; ++k) os << " " << c[static_cast<std::size_t>(k)];
    os << "\n";
  }
  os << "CELL_TYPES " << m.n_cells() << "\n";
  for (int c = 0; c < m.n_cells(); ++c) os << (m.dim == 1 ? 3 : 9) << "\n";  // VTK_LINE / VTK_QUAD
  os << "POINT_DATA " << m.n_nodes() << "\n";
  os << "SCALARS u double 1\n";
  os << "LOOKUP_TABLE default\n";
  for (double v : f.values()) os << v << "\n";
  if (!os) throw Error("write failure on VTK file: " + path);
}

// --------------------------------------------------------------------------
// Marching squares over the quads, with bilinear edge crossings. Ambiguous
// saddle cells are split using the cell-center value. Segments are chained
// into polylines keyed by the crossing edge.

using Polyline = std::vector<Vec2>;

inline std::vector<Polyline> extract_isoline(const FeField &f, double level) {
  const Mesh &m = f.mesh();
  if (m.dim != 2) throw Error("extract_isoline: 2D fields only");
  const std::vector<double> &u = f.values();

  using EdgeKey = std::pair<int, int>;
  auto edge_key = [](int a, int b) { return EdgeKey(std::min(a, b), std::max(a, b)); };

  struct Segment {
    EdgeKey e0, e1;
    Vec2 p0, p1;
  };
  std::vector<Segment> segments;

  for (const auto &c : m.cells) {
    double v[4];
    bool above[4];
    for (int k = 0; k < 4; ++k) {
      v[k] = u[static_cast<std::size_t>(c[static_cast<std::size_t>(k)])];
      above[k] = v[k] > level;
    }
    int pattern = (above[0] ? 1 : 0) | (above[1] ? 2 : 0) | (above[2] ? 4 : 0) | (above[3] ? 8 : 0);
    if (pattern == 0 || pattern == 15) continue;

    EdgeKey keys[4];
    Vec2 pts[4];
    bool crossed[4];
    for (int k = 0; k < 4; ++k) {
      int a = c[static_cast<std::size_t>(k)], b = c[static_cast<std::size_t>((k + 1) % 4)];
      crossed[k] = above[k] != above[(k + 1) % 4];
      if (!crossed[k]) continue;
      double va = v[k], vb = v[(k + 1) % 4];
      double s = (level - va) / (vb - va);
      keys[k] = edge_key(a, b);
      pts[k] = m.nodes[static_cast<std::size_t>(a)] + (m.nodes[static_cast<std::size_t>(b)] - m.nodes[static_cast<std::size_t>(a)]) * s;
    }

    int crossings[4], nc = 0;
    for (int k = 0; k < 4; ++k)
      if (crossed[k]) crossings[nc++] = k;

    if (nc == 2) {
      segments.push_back({keys[crossings[0]], keys[crossings[1]], pts[crossings[0]], pts[crossings[1]]});
    } else if (nc == 4) {
      // saddle: the bilinear center value decides which diagonal pair of
      // corners connects through the middle; the contour then encloses the
      // two isolated corners of the other pair
      double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
      bool center_above = center > level;
      if (center_above == above[0]) {
        // corners 0 and 2 join the center: enclose corners 1 and 3
        segments.push_back({keys[0], keys[1], pts[0], pts[1]});
        segments.push_back({keys[2], keys[3], pts[2], pts[3]});
      } else {
        // corners 1 and 3 join the center: enclose corners 0 and 2
        segments.push_back({keys[3], keys[0], pts[3], pts[0]});
        segments.push_back({keys[1], keys[2], pts[1], pts[2]});
      }
    }
  }

  // chain segments that share an edge key
  std::map<EdgeKey, std::vector<int>> by_edge;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    by_edge[segments[i].e0].push_back(static_cast<int>(i));
    by_edge[segments[i].e1].push_back(static_cast<int>(i));
  }
  std::vector<bool> used(segments.size(), false);
  std::vector<Polyline> out;

  auto walk = [&](int start, bool from_e0) {
    Polyline line;
    int seg = start;
    bool at_e0 = from_e0;
    line.push_back(at_e0 ? segments[static_cast<std::size_t>(seg)].p0 : segments[static_cast<std::size_t>(seg)].p1);
    for (;;) {
      used[static_cast<std::size_t>(seg)] = true;
      EdgeKey exit_key = at_e0 ? segments[static_cast<std::size_t>(seg)].e1 : segments[static_cast<std::size_t>(seg)].e0;
      line.push_back(at_e0 ? segments[static_cast<std::size_t>(seg)].p1 : segments[static_cast<std::size_t>(seg)].p0);
      int next = -1;
      for (int cand : by_edge[exit_key])
        if (!used[static_cast<std::size_t>(cand)]) {
          next = cand;
          break;
        }
      if (next < 0) break;
      at_e0 = segments[static_cast<std::size_t>(next)].e0 == exit_key;
      seg = next;
    }
    return line;
  };

  // open chains first (start at keys used once), then closed loops
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (used[i]) continue;
    bool e0_open = by_edge[segments[i].e0].size() == 1;
    bool e1_open = by_edge[segments[i].e1].size() == 1;
    if (e0_open || e1_open) out.push_back(walk(static_cast<int>(i), e0_open));
  }
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (!used[i]) out.push_back(walk(static_cast<int>(i), true));

  return out;
}

}  // namespace meltsim
