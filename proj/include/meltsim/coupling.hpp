#pragma once

// The coupled driver: n ambient steps per rigid-body step, the rigid-body
// velocity superposed as the (negated) convection velocity of the ambient
// field, a global auxiliary pose tracking the body as seen from the world
// frame, and the grid transform + field re-initialization that follow every
// accepted rigid-body move.

#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "meltsim/field.hpp"
#include "meltsim/pde.hpp"
#include "meltsim/rbd.hpp"

namespace meltsim {

struct TrajectoryState {
  int step = 0;  // outer index
  double time = 0.0;
  RigidState xi;      // pose the PDE grid follows
  RigidState xi_dot;  // rate
  RigidState xi_v;    // global auxiliary pose
  FeField field;
  double flux = 0.0;      // natural value active on the driven boundary
  long inner_steps = 0;   // cumulative ambient step count
};

struct CouplingConfig {
  int steps = 10;     // outer step count m
  double dt = 0.2;    // outer interval length
  int substeps = 1;   // ambient steps per interval n
  double theta = 1.0;
  ScalarFn diffusivity;
  SpaceTimeFn source;           // usually empty for trajectories
  std::map<int, BcSpec> bcs;    // template boundary conditions
  int flux_boundary = -1;       // boundary driven by the schedule, if any
  std::vector<std::pair<int, double>> flux_schedule;  // (first step, natural value)
  linsolve::SolveOptions solver;
  RbdProblem rbd;  // temperature sampler is filled per step

  void validate() const {
    if (steps < 1) throw Error("coupling: steps must be >= 1");
    if (substeps < 1) throw Error("coupling: substeps must be >= 1");
    if (!(dt > 0.0)) throw Error("coupling: step size must be positive");
    if (!diffusivity) throw Error("coupling: diffusivity is required");
  }

  double flux_at_step(int step) const {
    double value = 0.0;
    bool found = false;
    int best_from = std::numeric_limits<int>::min();
    for (const auto &[from, v] : flux_schedule)
      if (from <= step && from >= best_from) {
        best_from = from;
        value = v;
        found = true;
      }
    if (!found && flux_boundary >= 0) {
      auto it = bcs.find(flux_boundary);
      if (it != bcs.end() && it->second.kind == BcSpec::kNatural && it->second.fn)
        value = it->second.fn({0, 0}, 0.0);
    }
    return value;
  }
};

namespace coupling {

// The rigid body is held still while the field convects past it, so the
// convection velocity is the opposite of the body's velocity; a rotation
// rate adds the spin field about the centroid.
inline VelocityFn convection_from_rate(const RigidState &rate, const Vec2 &centroid) {
  Vec2 translation = rate.translation();
  double spin = rate.theta;
  return [translation, spin, centroid](const Vec2 &x) {
    return -(translation + perp(x - centroid) * spin);
  };
}

inline bool rate_is_zero(const RigidState &r) {
  return r.theta == 0.0 && r.r0 == 0.0 && r.r1 == 0.0;
}

inline TrajectoryState make_initial_state(FeField field, const RigidState &xi,
                                          const RigidState &xi_dot, double t0) {
  TrajectoryState ts{0, t0, xi, xi_dot, /*xi_v=*/xi, std::move(field), 0.0, 0};
  return ts;
}

inline TrajectoryState trajectory_step(const TrajectoryState &ts, const CouplingConfig &cfg) {
  cfg.validate();

  // (a) n ambient steps over this interval with the interval's flux override
  AmbientProblem p{FeSpace(ts.field.mesh_ptr())};
  p.diffusivity = cfg.diffusivity;
  p.source = cfg.source;
  p.bcs = cfg.bcs;
  double flux = cfg.flux_at_step(ts.step);
  if (cfg.flux_boundary >= 0 && !cfg.flux_schedule.empty())
    p.bcs[cfg.flux_boundary] = BcSpec::natural([flux](const Vec2 &, double) { return flux; });
  if (!rate_is_zero(ts.xi_dot)) {
    p.velocity = convection_from_rate(ts.xi_dot, rbd::body_centroid(cfg.rbd.body, ts.xi));
    p.velocity_is_zero = false;
  }
  p.initial_field = ts.field;
  p.theta = cfg.theta;
  p.dt = cfg.dt / cfg.substeps;
  p.t_start = ts.time;
  p.t_end = ts.time + cfg.dt;
  p.solver = cfg.solver;
  pde::UnsteadyResult ambient = pde::run_unsteady(p);
  long inner = static_cast<long>(ambient.history.size()) - 1;

  // (b, c) carry the field forward and solve the rigid-body step on it
  RbdProblem rp = cfg.rbd;
  const FeField &u = ambient.field;
  rp.temperature = [&u](const Vec2 &x) { return u.eval_extrapolated(x); };
  RigidState s_star = rbd::minimize_state(rp, ts.xi);
  RigidState dxi = s_star - ts.xi;

  // (d, e) rate update from the accepted move; the auxiliary pose adds the
  // move plus the drift the superposed convection represented (pre-update rate)
  TrajectoryState next = ts;
  next.step = ts.step + 1;
  next.time = ts.time + cfg.dt;
  next.inner_steps = ts.inner_steps + inner;
  next.flux = flux;
  next.xi_dot = ts.xi_dot + dxi * (1.0 / cfg.dt);
  next.xi_v = ts.xi_v + dxi + ts.xi_dot * cfg.dt;
  next.xi = s_star;

  // transform the grid by the accepted move and re-initialize the field;
  // rotating about the body-frame origin keeps the grid exactly on the hull
  // for any body (for a centered body this is also the centroid)
  if (dxi.theta == 0.0 && dxi.r0 == 0.0 && dxi.r1 == 0.0) {
    next.field = ambient.field;
  } else {
    Vec2 pivot = ts.xi.translation();
    auto moved = std::make_shared<Mesh>(
        mesh_ops::transform_rigid(ts.field.mesh(), dxi.theta, dxi.translation(), pivot));
    next.field = init_from_field(FeSpace(moved), ambient.field);
  }
  return next;
}

// Per-step artifacts of a trajectory run.
struct TrajectoryOutput {
  std::string directory;
  bool write_vtk = true;
  bool write_pci = true;
  double pci_level = 0.0;
};

inline void write_trajectory_artifacts(const TrajectoryState &ts, const TrajectoryOutput &out) {
  namespace fs = std::filesystem;
  fs::create_directories(out.directory);
  char name[64];
  if (out.write_vtk) {
    std::snprintf(name, sizeof name, "step_%04d.vtk", ts.step);
    export_vtk(ts.field, (fs::path(out.directory) / name).string(), ts.time);
  }
  if (out.write_pci && ts.field.mesh().dim == 2) {
    std::snprintf(name, sizeof name, "step_%04d_pci.csv", ts.step);
    std::ofstream os(fs::path(out.directory) / name);
    os.precision(17);
    os << "polyline,vertex,x,y\n";
    auto lines = extract_isoline(ts.field, out.pci_level);
    for (std::size_t li = 0; li < lines.size(); ++li)
      for (std::size_t vi = 0; vi < lines[li].size(); ++vi)
        os << li << "," << vi << "," << lines[li][vi].x << "," << lines[li][vi].y << "\n";
  }
}

inline void write_trajectory_csv(const std::vector<TrajectoryState> &history,
                                 const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open trajectory CSV: " + path);
  os.precision(17);
  os << "step,time,theta,r0,r1,theta_dot,r0_dot,r1_dot,theta_V,r0_V,r1_V,flux\n";
  for (const TrajectoryState &ts : history)
    os << ts.step << "," << ts.time << "," << ts.xi.theta << "," << ts.xi.r0 << "," << ts.xi.r1
       << "," << ts.xi_dot.theta << "," << ts.xi_dot.r0 << "," << ts.xi_dot.r1 << ","
       << ts.xi_v.theta << "," << ts.xi_v.r0 << "," << ts.xi_v.r1 << "," << ts.flux << "\n";
}

inline std::vector<TrajectoryState> run_trajectory(const CouplingConfig &cfg,
                                                   TrajectoryState initial,
                                                   const TrajectoryOutput *output = nullptr) {
  cfg.validate();
  std::vector<TrajectoryState> history;
  initial.flux = cfg.flux_at_step(0);
  history.push_back(std::move(initial));
  if (output) write_trajectory_artifacts(history.front(), *output);
  for (int i = 0; i < cfg.steps; ++i) {
    history.push_back(trajectory_step(history.back(), cfg));
    if (output) write_trajectory_artifacts(history.back(), *output);
  }
  if (output)
    write_trajectory_csv(history, (std::filesystem::path(output->directory) / "trajectory.csv").string());
  return history;
}

}  // namespace coupling

}  // namespace meltsim
