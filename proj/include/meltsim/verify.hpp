#pragma once

// Exact and manufactured solutions for the unsteady convection-diffusion
// solver, error norms, and convergence-order studies.
//
// The 1D manufactured solution transitions from a uniform cold state to the
// exact steady profile through a factor (1 - exp(-beta t^2)); the derived
// Neumann value and source keep it an exact solution of the PDE. The 2D
// variant rotates the profile with a linearly varying velocity v = (vmax y, 0)
// and needs a guard at y = 0 where the closed forms become 0/0.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "meltsim/expr.hpp"
#include "meltsim/pde.hpp"

namespace meltsim {

namespace verify {

inline double exact_steady_1d(double v, double alpha, double g, double x) {
  if (!(alpha > 0.0)) throw Error("exact_steady_1d: alpha must be positive");
  if (std::abs(v / alpha) < 1e-12) return g * x;
  return g * (std::exp(v * x / alpha) - 1.0) / (std::exp(v / alpha) - 1.0);
}

// Neumann value at x=0 that holds the steady boundary temperature at zero.
inline double neumann_steady(double v, double alpha, double g) {
  if (!(alpha > 0.0)) throw Error("neumann_steady: alpha must be positive");
  if (std::abs(v / alpha) < 1e-12) return -g * alpha;
  return v * g / (1.0 - std::exp(v / alpha));
}

// glue from expressions to the coefficient-function types
inline SpaceTimeFn space_time_fn(Expr e, const Bindings &b) {
  auto resolved = e.resolve(b);
  return [e = std::move(e), resolved = std::move(resolved)](const Vec2 &x, double t) {
    return e.eval_resolved(resolved, x.x, x.y, t);
  };
}

inline ScalarFn scalar_fn(Expr e, const Bindings &b) {
  auto resolved = e.resolve(b);
  return [e = std::move(e), resolved = std::move(resolved)](const Vec2 &x) {
    return e.eval_resolved(resolved, x.x, x.y, 0.0);
  };
}

inline VelocityFn velocity_fn(std::vector<Expr> comps, const Bindings &b) {
  if (comps.size() == 1) {
    auto r = comps[0].resolve(b);
    return [e = std::move(comps[0]), r = std::move(r)](const Vec2 &x) {
      return Vec2{e.eval_resolved(r, x.x, x.y, 0.0), 0.0};
    };
  }
  if (comps.size() != 2) throw Error("velocity needs 1 or 2 components");
  auto r0 = comps[0].resolve(b);
  auto r1 = comps[1].resolve(b);
  return [e0 = std::move(comps[0]), e1 = std::move(comps[1]), r0 = std::move(r0),
          r1 = std::move(r1)](const Vec2 &x) {
    return Vec2{e0.eval_resolved(r0, x.x, x.y, 0.0), e1.eval_resolved(r1, x.x, x.y, 0.0)};
  };
}

struct MmsParams {
  double v = -5.0;     // 1D convection velocity / 2D vmax
  double alpha = 2.0;
  double g = -2.0;
  double beta = 10.0;  // time transition rate; steady by t = 1
};

struct MmsCase {
  int dim = 1;
  MmsParams params;
  GridSpec grid;
  Bindings bindings;
  Expr exact;
  Expr source;
  Expr u0;
  Expr diffusivity;
  std::vector<Expr> velocity;
  struct Bc {
    BcSpec::Kind kind;
    Expr fn;
  };
  std::map<int, Bc> bcs;
  double theta = 0.5;

  AmbientProblem problem(std::shared_ptr<const Mesh> mesh, double dt, double t_end) const {
    AmbientProblem p{FeSpace(std::move(mesh))};
    bool vel_zero = true;
    for (const Expr &c : velocity) vel_zero = vel_zero && c.is_literal_zero();
    if (!vel_zero) p.velocity = velocity_fn(velocity, bindings);
    p.velocity_is_zero = vel_zero;
    p.diffusivity = scalar_fn(diffusivity, bindings);
    p.source = space_time_fn(source, bindings);
    for (const auto &[id, bc] : bcs)
      p.bcs[id] = {bc.kind, space_time_fn(bc.fn, bindings)};
    p.initial_values = scalar_fn(u0, bindings);
    p.theta = theta;
    p.dt = dt;
    p.t_end = t_end;
    return p;
  }

  SpaceTimeFn exact_fn() const { return space_time_fn(exact, bindings); }
};

inline MmsCase mms1d(const MmsParams &prm) {
  if (!(prm.alpha > 0.0)) throw Error("mms1d: alpha must be positive");
  if (!(prm.beta > 0.0)) throw Error("mms1d: beta must be positive");
  MmsCase c;
  c.dim = 1;
  c.params = prm;
  c.grid = {GridName::kHyperCube, {0.0, 1.0}};
  c.bindings.set("v", prm.v);
  c.bindings.set("alpha", prm.alpha);
  c.bindings.set("g", prm.g);
  c.bindings.set("beta", prm.beta);

  const bool pure_diffusion = std::abs(prm.v / prm.alpha) < 1e-12;
  if (pure_diffusion) {
    c.exact = Expr::parse("-g*((exp(-beta*t^2) - 1)*(x - 1) - 1)");
    c.source = Expr::parse("2*beta*g*t*exp(-beta*t^2)*(x - 1)");
    c.bcs[0] = {BcSpec::kNatural, Expr::parse("g*alpha*(exp(-beta*t^2) - 1)")};
  } else {
    c.exact = Expr::parse(
        "g - g*((exp((v*x)/alpha) - 1)/(exp(v/alpha) - 1) - 1)*(exp(-beta*t^2) - 1)");
    c.source = Expr::parse(
        "2*beta*g*t*exp(-beta*t^2)*((exp(v*x/alpha) - 1)/(exp(v/alpha) - 1) - 1)");
    c.bcs[0] = {BcSpec::kNatural, Expr::parse("(g*v*(exp(-beta*t^2) - 1))/(exp(v/alpha) - 1)")};
  }
  c.bcs[1] = {BcSpec::kStrong, Expr::parse("g")};
  c.u0 = Expr::parse("g");
  c.diffusivity = Expr::parse("alpha");
  c.velocity = {Expr::parse(pure_diffusion ? "0" : "v")};
  return c;
}

inline MmsCase mms2d(const MmsParams &prm) {
  if (!(prm.alpha > 0.0)) throw Error("mms2d: alpha must be positive");
  if (prm.v == 0.0) throw Error("mms2d: vmax must be nonzero");
  MmsCase c;
  c.dim = 2;
  c.params = prm;
  c.grid = {GridName::kHyperRectangle, {0.0, 0.0, 1.0, 1.0}};
  c.bindings.set("vmax", prm.v);
  c.bindings.set("alpha", prm.alpha);
  c.bindings.set("g", prm.g);
  c.bindings.set("beta", prm.beta);
  c.bindings.set("epsilon", 1e-14);

  c.exact = Expr::parse(
      "if(y < epsilon,"
      " g + (g - g*x)*(exp(-beta*t^2) - 1),"
      " g + (g - (g*(exp((vmax*x*y)/alpha) - 1))/(exp((vmax*y)/alpha) - 1))*"
      "(exp(-beta*t^2) - 1))");
  c.velocity = Expr::parse_vector("vmax*y; 0");
  c.diffusivity = Expr::parse("alpha");
  c.u0 = Expr::parse("g");

  // source: time transient plus the alpha * u_yy tail (the convection term
  // cancels alpha * u_xx exactly for this solution)
  c.source = Expr::parse(
      "if(y < epsilon,"
      " 2*beta*g*t*exp(-beta*t^2)*(x - 1)"
      "  + g*vmax^2*(2*x^3 - 3*x^2 + x)*(exp(-beta*t^2) - 1)/(6*alpha),"
      " 2*beta*g*t*exp(-beta*t^2)*((exp((vmax*x*y)/alpha) - 1)/(exp((vmax*y)/alpha) - 1) - 1)"
      "  + g*(exp(-beta*t^2) - 1)*vmax^2/alpha*("
      "    x^2*exp((vmax*x*y)/alpha)/(exp((vmax*y)/alpha) - 1)"
      "    - x*exp((vmax*x*y)/alpha)*exp((vmax*y)/alpha)/(exp((vmax*y)/alpha) - 1)^2"
      "    - exp((vmax*y)/alpha)*(exp((vmax*x*y)/alpha) - 1 + x*exp((vmax*x*y)/alpha))/"
      "(exp((vmax*y)/alpha) - 1)^2"
      "    + 2*exp((2*vmax*y)/alpha)*(exp((vmax*x*y)/alpha) - 1)/(exp((vmax*y)/alpha) - 1)^3))");

  // boundaries: 0 x=0, 1 y=0, 2 x=1, 3 y=1
  c.bcs[0] = {BcSpec::kNatural,
              Expr::parse("if(y < epsilon, g*alpha*(exp(-beta*t^2) - 1),"
                          " (g*vmax*y*(exp(-beta*t^2) - 1))/(exp((vmax*y)/alpha) - 1))")};
  c.bcs[1] = {BcSpec::kNatural, Expr::parse("(g*vmax*(x^2 - x)*(exp(-beta*t^2) - 1))/2")};
  c.bcs[2] = {BcSpec::kStrong, Expr::parse("g")};
  c.bcs[3] = {BcSpec::kNatural,
              Expr::parse("g*vmax*(exp(-beta*t^2) - 1)*"
                          "((exp((vmax*x)/alpha) - 1)*exp(vmax/alpha)"
                          " - x*(exp(vmax/alpha) - 1)*exp((vmax*x)/alpha))/"
                          "(exp(vmax/alpha) - 1)^2")};
  return c;
}

// L2 norm of (u_h - exact) at time t, order-3 Gauss quadrature per direction
// to stay clear of superconvergence points.
inline double l2_error(const FeField &f, const SpaceTimeFn &exact, double t) {
  const Mesh &m = f.mesh();
  double err2 = 0.0;
  for (int cell = 0; cell < m.n_cells(); ++cell) {
    assembly::ElementData ed = assembly::element_data(m, cell, 3);
    const auto &dofs = m.cells[static_cast<std::size_t>(cell)];
    for (std::size_t q = 0; q < ed.jxw.size(); ++q) {
      double uh = 0.0;
      for (int a = 0; a < ed.n_nodes; ++a)
        uh += ed.shape[q][static_cast<std::size_t>(a)] *
              f.values()[static_cast<std::size_t>(dofs[static_cast<std::size_t>(a)])];
      double d = uh - exact(ed.qpoints[q], t);
      err2 += d * d * ed.jxw[q];
    }
  }
  return std::sqrt(err2);
}

// Least-squares slope of log(error) against log(scale).
inline double observed_order(const std::vector<std::pair<double, double>> &levels) {
  if (levels.size() < 2) throw Error("observed_order: need at least two levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto &[scale, error] : levels) {
    if (!(error > 0.0)) throw Error("observed_order: errors must be positive");
    double lx = std::log(scale), ly = std::log(error);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(levels.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

enum class StudyMode { kSpatial, kTemporal };

struct StudyOptions {
  int levels = 5;
  int base_cycles = 3;     // spatial: coarsest mesh refinement
  double dt_factor = 0.5;  // spatial: dt = factor * h
  double dt0 = 0.125;      // temporal: coarsest step
  int temporal_mesh_cycles = 6;   // fixed mesh of the temporal study
  int reference_refinement = 8;   // temporal reference runs at dt_finest / this
  double t_end = 1.0;
  double solver_tol = 1e-11;
};

// L2 norm of the difference of two fields on the same mesh.
inline double l2_field_difference(const FeField &a, const FeField &b) {
  const Mesh &m = a.mesh();
  if (b.mesh().n_nodes() != m.n_nodes()) throw Error("l2_field_difference: mesh mismatch");
  double err2 = 0.0;
  for (int cell = 0; cell < m.n_cells(); ++cell) {
    assembly::ElementData ed = assembly::element_data(m, cell, 3);
    const auto &dofs = m.cells[static_cast<std::size_t>(cell)];
    for (std::size_t q = 0; q < ed.jxw.size(); ++q) {
      double d = 0.0;
      for (int k = 0; k < ed.n_nodes; ++k) {
        std::size_t dof = static_cast<std::size_t>(dofs[static_cast<std::size_t>(k)]);
        d += ed.shape[q][static_cast<std::size_t>(k)] * (a.values()[dof] - b.values()[dof]);
      }
      err2 += d * d * ed.jxw[q];
    }
  }
  return std::sqrt(err2);
}

struct LevelResult {
  int level = 0;
  double scale = 0.0;
  double error = 0.0;
  double local_order = 0.0;  // order against the previous level
};

struct ConvergenceReport {
  StudyMode mode = StudyMode::kSpatial;
  std::vector<LevelResult> levels;
  double fitted_order = 0.0;
};

inline ConvergenceReport run_convergence_study(const MmsCase &c, StudyMode mode,
                                               StudyOptions opt = {}) {
  ConvergenceReport report;
  report.mode = mode;
  std::vector<std::pair<double, double>> pts;

  Mesh coarse = mesh_ops::generate(c.grid);

  if (mode == StudyMode::kSpatial) {
    for (int k = 0; k < opt.levels; ++k) {
      int cycles = opt.base_cycles + k;
      auto mesh = std::make_shared<Mesh>(mesh_ops::refine_global(coarse, cycles));
      double h = std::ldexp(1.0, -cycles);  // unit domains
      double dt = opt.dt_factor * h;
      AmbientProblem p = c.problem(mesh, dt, opt.t_end);
      p.solver.tol = opt.solver_tol;
      auto res = pde::run_unsteady(p);
      double err = l2_error(res.field, c.exact_fn(), opt.t_end);
      LevelResult lr{cycles, h, err, 0.0};
      if (!pts.empty()) lr.local_order = std::log2(pts.back().second / err);
      pts.push_back({h, err});
      report.levels.push_back(lr);
    }
  } else {
    // Fixed mesh; the error of each dt is measured against a reference run
    // with a much smaller step on the same mesh, which cancels the spatial
    // discretization error and isolates the time-stepping order.
    auto mesh = std::make_shared<Mesh>(mesh_ops::refine_global(coarse, opt.temporal_mesh_cycles));
    double dt_finest = opt.dt0 / std::ldexp(1.0, opt.levels - 1);
    AmbientProblem pref = c.problem(mesh, dt_finest / opt.reference_refinement, opt.t_end);
    pref.solver.tol = opt.solver_tol;
    FeField reference = pde::run_unsteady(pref).field;
    for (int k = 0; k < opt.levels; ++k) {
      double dt = opt.dt0 / std::ldexp(1.0, k);
      AmbientProblem p = c.problem(mesh, dt, opt.t_end);
      p.solver.tol = opt.solver_tol;
      auto res = pde::run_unsteady(p);
      double err = l2_field_difference(res.field, reference);
      LevelResult lr{k, dt, err, 0.0};
      if (!pts.empty()) lr.local_order = std::log2(pts.back().second / err);
      pts.push_back({dt, err});
      report.levels.push_back(lr);
    }
  }
  report.fitted_order = observed_order(pts);
  return report;
}

// Parameter rows of the 1D and 2D convergence tables.
inline std::vector<MmsParams> table2_rows() {
  std::vector<MmsParams> rows;
  for (double v : {-5.0, -1.0, 0.0})
    for (double alpha : {2.0, 1.0})
      for (double g : {-2.0, -1.0}) rows.push_back({v, alpha, g, 10.0});
  return rows;
}

inline std::vector<MmsParams> table3_rows() {
  std::vector<MmsParams> rows;
  for (double alpha : {2.0, 1.0})
    for (double vmax : {-5.0, -1.0})
      for (double g : {-2.0, -1.0}) rows.push_back({vmax, alpha, g, 10.0});
  return rows;
}

}  // namespace verify

}  // namespace meltsim
