#pragma once

// Theta-family time integration of the spatially discretized unsteady
// convection-diffusion problem
//
//   u_t + v(x).grad(u) - div(alpha(x) grad(u)) = s(x, t)
//
// with strong (Dirichlet) and natural (Neumann) boundary conditions, plus
// the Stefan-condition flux helpers for the melt-film boundary and the
// Peclet diagnostics that explain when the standard Galerkin form starts to
// oscillate.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meltsim/assembly.hpp"
#include "meltsim/field.hpp"
#include "meltsim/linsolve.hpp"

namespace meltsim {

struct BcSpec {
  enum Kind { kStrong, kNatural };
  Kind kind = kStrong;
  SpaceTimeFn fn;

  static BcSpec strong(SpaceTimeFn g) { return {kStrong, std::move(g)}; }
  static BcSpec natural(SpaceTimeFn h) { return {kNatural, std::move(h)}; }
};

struct AmbientProblem {
  FeSpace space;
  VelocityFn velocity;           // empty means v = 0
  bool velocity_is_zero = true;  // drives CG vs BiCGStab selection
  ScalarFn diffusivity;
  SpaceTimeFn source;  // empty means s = 0
  std::map<int, BcSpec> bcs;
  ScalarFn initial_values;                // cold start
  std::optional<FeField> initial_field;   // restart (wins over initial_values)
  double theta = 0.5;
  double dt = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  linsolve::SolveOptions solver;

  explicit AmbientProblem(FeSpace sp) : space(std::move(sp)) {}

  void validate() const {
    const Mesh &m = *space.mesh;
    if (static_cast<int>(bcs.size()) != m.n_boundary_ids)
      throw Error("AmbientProblem: mesh has " + std::to_string(m.n_boundary_ids) +
                  " boundary ids but " + std::to_string(bcs.size()) + " conditions were given");
    for (const auto &[id, bc] : bcs) {
      if (id < 0 || id >= m.n_boundary_ids)
        throw Error("AmbientProblem: condition on unknown boundary id " + std::to_string(id));
      if (!bc.fn) throw Error("AmbientProblem: empty function on boundary " + std::to_string(id));
    }
    if (!(theta >= 0.0 && theta <= 1.0)) throw Error("AmbientProblem: theta outside [0, 1]");
    if (!diffusivity) throw Error("AmbientProblem: diffusivity is required");
  }

  std::vector<std::pair<int, SpaceTimeFn>> neumann_list() const {
    std::vector<std::pair<int, SpaceTimeFn>> out;
    for (const auto &[id, bc] : bcs)
      if (bc.kind == BcSpec::kNatural) out.push_back({id, bc.fn});
    return out;
  }

  std::vector<int> strong_ids() const {
    std::vector<int> out;
    for (const auto &[id, bc] : bcs)
      if (bc.kind == BcSpec::kStrong) out.push_back(id);
    return out;
  }
};

namespace pde {

inline double local_peclet(double v_mag, double h_cell, double alpha) {
  if (!(alpha > 0.0)) throw Error("local_peclet: alpha must be positive");
  return v_mag * h_cell / (2.0 * alpha);
}

inline double global_peclet(double v_mag, double length, double alpha) {
  if (!(alpha > 0.0)) throw Error("global_peclet: alpha must be positive");
  return v_mag * length / alpha;
}

// One theta step as pure linear algebra:
//   (M + dt theta (C+K)) U1 = M U0 - dt (1-theta)(C+K) U0
//                             + dt (theta f1 + (1-theta) f0)
inline CsrMatrix theta_matrix(const CsrMatrix &M, const CsrMatrix &CK, double dt, double theta) {
  CsrMatrix A = M;
  for (std::size_t k = 0; k < A.values.size(); ++k) A.values[k] += dt * theta * CK.values[k];
  return A;
}

inline std::vector<double> theta_rhs(const CsrMatrix &M, const CsrMatrix &CK,
                                     const std::vector<double> &u, const std::vector<double> &f0,
                                     const std::vector<double> &f1, double dt, double theta) {
  std::vector<double> Mu = M.multiply(u);
  std::vector<double> CKu = CK.multiply(u);
  std::vector<double> rhs(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    rhs[i] = Mu[i] - dt * (1.0 - theta) * CKu[i] + dt * (theta * f1[i] + (1.0 - theta) * f0[i]);
  return rhs;
}

// Matrices are assembled once and reused while v, alpha and the mesh stay
// fixed; the system matrix is refreshed only when dt changes (final
// truncated step).
struct ThetaWorkspace {
  CsrMatrix M, CK;
  CsrMatrix A;
  double built_dt = -1.0;
  std::vector<double> f_cache;
  double f_cache_t = std::numeric_limits<double>::quiet_NaN();

  explicit ThetaWorkspace(const AmbientProblem &p) {
    p.validate();
    ScalarFn alpha = p.diffusivity;
    ScalarFn checked = [alpha](const Vec2 &x) {
      double a = alpha(x);
      if (!(a > 0.0)) throw Error("diffusivity must be positive everywhere it is sampled");
      return a;
    };
    M = assembly::build_mass(p.space);
    CK = assembly::build_convection_diffusion(p.space, p.velocity, checked);
  }

  std::vector<double> rhs_at(const AmbientProblem &p, double t) {
    if (t == f_cache_t) return f_cache;
    f_cache = assembly::build_rhs(p.space, p.source, p.neumann_list(), t);
    f_cache_t = t;
    return f_cache;
  }
};

inline std::vector<double> step_theta(const AmbientProblem &p, ThetaWorkspace &ws,
                                      const std::vector<double> &u_j, double t_j, double dt) {
  std::vector<double> f0 = ws.rhs_at(p, t_j);
  std::vector<double> f1 = ws.rhs_at(p, t_j + dt);

  if (ws.built_dt != dt) {
    ws.A = theta_matrix(ws.M, ws.CK, dt, p.theta);
    ws.built_dt = dt;
  }
  SparseSystem sys;
  sys.A = ws.A;
  sys.rhs = theta_rhs(ws.M, ws.CK, u_j, f0, f1, dt, p.theta);

  for (int id : p.strong_ids())
    assembly::apply_dirichlet_lifting(sys, p.bcs.at(id).fn, {id}, *p.space.mesh, t_j + dt);

  std::vector<double> u = p.velocity_is_zero ? linsolve::cg_solve(sys.A, sys.rhs, p.solver)
                                             : linsolve::bicgstab_solve(sys.A, sys.rhs, p.solver);
  sys.restore_dirichlet(u);
  return u;
}

// Convenience single-step entry used by tests; run_unsteady keeps one
// workspace across all steps.
inline std::vector<double> step_theta(const AmbientProblem &p, const std::vector<double> &u_j,
                                      double t_j, double dt) {
  ThetaWorkspace ws(p);
  return step_theta(p, ws, u_j, t_j, dt);
}

struct StepRecord {
  int step = 0;
  double time = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
};

struct UnsteadyResult {
  FeField field;
  std::vector<StepRecord> history;
};

using Observer = std::function<void(int step, double t, const FeField &)>;

inline std::vector<double> initial_dofs(const AmbientProblem &p) {
  const Mesh &m = *p.space.mesh;
  std::vector<double> u;
  if (p.initial_field) {
    u = init_from_field(p.space, *p.initial_field).values();
  } else {
    if (!p.initial_values) throw Error("AmbientProblem: no initial values");
    u.reserve(static_cast<std::size_t>(m.n_nodes()));
    for (const Vec2 &x : m.nodes) u.push_back(p.initial_values(x));
  }
  // project the strong boundary data at t_start so the first step starts
  // from consistent values
  for (int id : p.strong_ids())
    for (const BoundaryFace &f : m.faces)
      if (f.boundary_id == id)
        for (int k = 0; k < 2; ++k)
          if (f.nodes[static_cast<std::size_t>(k)] >= 0) {
            int node = f.nodes[static_cast<std::size_t>(k)];
            u[static_cast<std::size_t>(node)] =
                p.bcs.at(id).fn(m.nodes[static_cast<std::size_t>(node)], p.t_start);
          }
  return u;
}

inline UnsteadyResult run_unsteady(const AmbientProblem &p, const std::vector<Observer> &observers = {}) {
  p.validate();
  if (!(p.t_end > p.t_start)) throw Error("run_unsteady: t_end must exceed t_start");
  if (!(p.dt > 0.0)) throw Error("run_unsteady: step size must be positive");

  ThetaWorkspace ws(p);
  std::vector<double> u = initial_dofs(p);

  auto record = [&](int step, double t, const std::vector<double> &dofs, UnsteadyResult &res) {
    StepRecord r;
    r.step = step;
    r.time = t;
    r.min_u = *std::min_element(dofs.begin(), dofs.end());
    r.max_u = *std::max_element(dofs.begin(), dofs.end());
    res.history.push_back(r);
  };

  UnsteadyResult res{FeField(p.space.mesh, u), {}};
  record(0, p.t_start, u, res);
  for (const Observer &ob : observers) ob(0, p.t_start, res.field);

  double t = p.t_start;
  int step = 0;
  while (t < p.t_end - 1e-12 * std::max(1.0, std::abs(p.t_end))) {
    double dt = std::min(p.dt, p.t_end - t);
    if (p.t_end - (t + dt) < 1e-12 * p.dt) dt = p.t_end - t;  // land on t_end exactly
    u = step_theta(p, ws, u, t, dt);
    t += dt;
    ++step;
    res.field = FeField(p.space.mesh, u);
    record(step, t, u, res);
    for (const Observer &ob : observers) ob(step, t, res.field);
  }
  return res;
}

// --------------------------------------------------------------------------
// Stefan-condition melt-film boundary.

struct StefanFilmParams {
  double k_L = 0.5611;    // W/(m K), liquid water near freezing
  double k_S = 2.14;      // W/(m K), ice
  double rho_S = 917.0;   // kg/m^3
  double c_pS = 2110.0;   // J/(kg K)
  double h_m = 3.34e6;    // J/kg
  double T_m = 0.0;       // degC
  ScalarFn T_w;           // wall temperature (degC)
  ScalarFn delta;         // melt film thickness (m), > 0

  double alpha_S() const { return k_S / (rho_S * c_pS); }
};

// Heat flux applied at the melt boundary for a probe moving at speed v,
// normalized to temperature units: h = q+ / (rho_S c_pS) with
// q+ = -k_L (T_m - T_w)/delta - rho_S h_m v.
inline double stefan_flux(const StefanFilmParams &p, double v, const Vec2 &x) {
  double d = p.delta(x);
  if (!(d > 0.0)) throw Error("stefan_flux: melt film thickness must be positive");
  double q_plus = -p.k_L * (p.T_m - p.T_w(x)) / d - p.rho_S * p.h_m * v;
  return q_plus / (p.rho_S * p.c_pS);
}

inline double stefan_number(double c_pS, double T_h, double T_m, double h_m) {
  if (!(h_m > 0.0)) throw Error("stefan_number: latent heat must be positive");
  return c_pS * (T_h - T_m) / h_m;
}

}  // namespace pde

}  // namespace meltsim
