#pragma once

// Rigid-body dynamics as a constrained nonlinear program: minimize the
// gravitational potential of the body subject to no-solid-penetration
// constraints sampled on the hull (the temperature at every sample point
// must reach the melting temperature) and per-step box bounds.
//
// The solver is an augmented-Lagrangian outer loop around a projected
// gradient descent with central finite-difference gradients, followed by a
// feasible coordinate-descent polish. Everything runs on a fixed iteration
// schedule, so identical inputs give identical results.

#include <array>
#include <functional>
#include <vector>

#include "meltsim/common.hpp"
#include "meltsim/mesh.hpp"
#include "meltsim/rigid_state.hpp"

namespace meltsim {

struct BodyGeometry {
  enum class Shape { kCircle, kSphereCylinder };
  Shape shape = Shape::kCircle;
  std::vector<double> sizes;  // circle: {radius}; sphere_cylinder: {R_nose, L_body}
  std::vector<Vec2> hull;     // counterclockwise, closed implicitly (last connects to first)
  Vec2 centroid0;
  int hull_samples = 32;  // N_gamma

  static BodyGeometry circle(double radius, int n_samples = 32);
  static BodyGeometry sphere_cylinder(double r_nose, double l_body, int n_samples = 32);
};

namespace rbd {

// Shoelace area and Green's-theorem centroid of a simple ccw polygon.
inline std::pair<double, Vec2> centroid_area(const std::vector<Vec2> &hull) {
  if (hull.size() < 3) throw Error("centroid_area: need at least 3 vertices");
  double area2 = 0.0;
  Vec2 c;
  double bbox = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 &p = hull[i];
    const Vec2 &q = hull[(i + 1) % hull.size()];
    double cross = p.x * q.y - q.x * p.y;
    area2 += cross;
    c.x += (p.x + q.x) * cross;
    c.y += (p.y + q.y) * cross;
    bbox = std::max({bbox, std::abs(p.x), std::abs(p.y)});
  }
  double area = 0.5 * area2;
  if (std::abs(area) <= 1e-14 * bbox * bbox) throw Error("centroid_area: degenerate polygon");
  if (area < 0.0) throw Error("centroid_area: polygon is not counterclockwise");
  return {area, Vec2{c.x / (6.0 * area), c.y / (6.0 * area)}};
}

}  // namespace rbd

inline BodyGeometry BodyGeometry::circle(double radius, int n_samples) {
  if (!(radius > 0.0)) throw Error("circle body: radius must be positive");
  if (n_samples < 8) throw Error("body: need at least 8 hull samples");
  BodyGeometry b;
  b.shape = Shape::kCircle;
  b.sizes = {radius};
  b.hull_samples = n_samples;
  // regular polygon with vertices on the exact circle: equally-spaced
  // arc-length samples then land exactly on circle points
  for (int k = 0; k < n_samples; ++k) {
    double phi = 2.0 * kPi * k / n_samples;
    b.hull.push_back({radius * std::cos(phi), radius * std::sin(phi)});
  }
  b.centroid0 = rbd::centroid_area(b.hull).second;
  return b;
}

inline BodyGeometry BodyGeometry::sphere_cylinder(double r_nose, double l_body, int n_samples) {
  if (!(r_nose > 0.0 && l_body > 0.0)) throw Error("sphere_cylinder body: sizes must be positive");
  if (n_samples < 8) throw Error("body: need at least 8 hull samples");
  BodyGeometry b;
  b.shape = Shape::kSphereCylinder;
  b.sizes = {r_nose, l_body};
  b.hull_samples = n_samples;
  // same parameterization as the shell generator: sides and back get a few
  // segments, the nose quarters enough to track the arc
  auto emit = [&](double t0, double t1, int n) {
    for (int k = 0; k < n; ++k)
      b.hull.push_back(detail::probe_hull_point(t0 + (t1 - t0) * k / n, r_nose, l_body));
  };
  emit(0, 1, 4);
  emit(1, 2, 4);
  emit(2, 3, 4);
  emit(3, 4, 8);
  emit(4, 5, 8);
  b.centroid0 = rbd::centroid_area(b.hull).second;
  return b;
}

struct RbdProblem {
  BodyGeometry body;
  Vec2 gravity{0.0, -1.0};  // field b of the potential -b . centroid
  double melting_temperature = 0.0;
  std::function<double(const Vec2 &)> temperature;  // total sampler (extrapolated field)
  RigidState max_change{0.0, 0.0, 0.0};             // per-step bounds; 0 freezes a dof
  double tol_g = 1e-6;
  double tol_f = 1e-9;
  double step_tol = 1e-4;
  int outer_iterations = 12;
  int inner_iterations = 60;
};

namespace rbd {

inline std::vector<Vec2> hull_points(const BodyGeometry &body, const RigidState &s) {
  const std::vector<Vec2> &hull = body.hull;
  const int n = body.hull_samples;
  std::vector<double> seg_len(hull.size());
  double total = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    seg_len[i] = (hull[(i + 1) % hull.size()] - hull[i]).norm();
    total += seg_len[i];
  }
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (int k = 0; k < n; ++k) {
    double target = total * k / n;
    while (seg_start + seg_len[seg] < target - 1e-14 * total) {
      seg_start += seg_len[seg];
      seg = (seg + 1) % hull.size();
    }
    double local = seg_len[seg] > 0 ? (target - seg_start) / seg_len[seg] : 0.0;
    local = std::clamp(local, 0.0, 1.0);
    Vec2 p = hull[seg] + (hull[(seg + 1) % hull.size()] - hull[seg]) * local;
    out.push_back(s.apply(p));
  }
  return out;
}

inline Vec2 body_centroid(const BodyGeometry &body, const RigidState &s) {
  return s.apply(body.centroid0);
}

inline double potential_energy(const RbdProblem &p, const RigidState &s) {
  return -p.gravity.dot(body_centroid(p.body, s));
}

inline std::vector<double> feasibility(const RbdProblem &p, const RigidState &s) {
  if (!p.temperature) throw Error("feasibility: no temperature sampler");
  std::vector<double> g;
  for (const Vec2 &x : hull_points(p.body, s)) g.push_back(p.temperature(x) - p.melting_temperature);
  return g;
}

inline double min_feasibility(const RbdProblem &p, const RigidState &s) {
  double m = std::numeric_limits<double>::max();
  for (double g : feasibility(p, s)) m = std::min(m, g);
  return m;
}

namespace detail_nlp {

inline std::array<double, 3> to_array(const RigidState &s) { return {s.theta, s.r0, s.r1}; }
inline RigidState from_array(const std::array<double, 3> &a) { return {a[0], a[1], a[2]}; }

inline std::array<double, 3> clamp_box(const std::array<double, 3> &s,
                                       const std::array<double, 3> &lo,
                                       const std::array<double, 3> &hi) {
  return {std::clamp(s[0], lo[0], hi[0]), std::clamp(s[1], lo[1], hi[1]),
          std::clamp(s[2], lo[2], hi[2])};
}

}  // namespace detail_nlp

// One rigid-body step: minimize the potential subject to sampled melt
// constraints and the per-step box. An infeasible start is returned
// unchanged (the body stays put until it is surrounded by melt).
inline RigidState minimize_state(const RbdProblem &p, const RigidState &s0) {
  using detail_nlp::clamp_box;
  using detail_nlp::from_array;
  using detail_nlp::to_array;

  if (min_feasibility(p, s0) < 0.0) return s0;

  const std::array<double, 3> start = to_array(s0);
  const std::array<double, 3> bound = to_array(p.max_change);
  std::array<double, 3> lo, hi, scale;
  bool any_free = false;
  for (int c = 0; c < 3; ++c) {
    if (bound[static_cast<std::size_t>(c)] < 0.0) throw Error("minimize_state: negative max_change");
    lo[static_cast<std::size_t>(c)] = start[static_cast<std::size_t>(c)] - bound[static_cast<std::size_t>(c)];
    hi[static_cast<std::size_t>(c)] = start[static_cast<std::size_t>(c)] + bound[static_cast<std::size_t>(c)];
    scale[static_cast<std::size_t>(c)] = bound[static_cast<std::size_t>(c)];
    any_free = any_free || bound[static_cast<std::size_t>(c)] > 0.0;
  }
  if (!any_free) return s0;

  // normalized objective: the argmin is invariant under positive scaling of
  // the gravity vector, and normalizing makes the returned state exactly so
  const double b_norm = p.gravity.norm();
  const Vec2 b_hat = b_norm > 0.0 ? p.gravity * (1.0 / b_norm) : Vec2{};
  auto objective = [&](const std::array<double, 3> &s) {
    return -b_hat.dot(body_centroid(p.body, from_array(s)));
  };
  auto constraints = [&](const std::array<double, 3> &s) { return feasibility(p, from_array(s)); };
  auto min_g = [&](const std::array<double, 3> &s) {
    double m = std::numeric_limits<double>::max();
    for (double g : constraints(s)) m = std::min(m, g);
    return m;
  };

  const std::size_t n_con = constraints(start).size();
  std::vector<double> lambda(n_con, 0.0);
  double mu = std::max(1.0, std::abs(objective(start)));

  auto augmented = [&](const std::array<double, 3> &s) {
    double val = objective(s);
    std::vector<double> g = constraints(s);
    for (std::size_t k = 0; k < n_con; ++k) {
      double shifted = lambda[k] / mu - g[k];
      if (shifted > 0.0) val += 0.5 * mu * shifted * shifted - 0.5 * lambda[k] * lambda[k] / mu;
    }
    return val;
  };

  std::array<double, 3> best = start;
  double best_obj = objective(start);

  std::array<double, 3> s = start;
  double prev_violation = std::numeric_limits<double>::max();
  for (int outer = 0; outer < p.outer_iterations; ++outer) {
    // projected gradient descent on the augmented objective
    for (int inner = 0; inner < p.inner_iterations; ++inner) {
      std::array<double, 3> grad{};
      for (int c = 0; c < 3; ++c) {
        if (bound[static_cast<std::size_t>(c)] == 0.0) continue;
        double fd = 1e-6 * std::max(1.0, bound[static_cast<std::size_t>(c)]);
        std::array<double, 3> sp = s, sm = s;
        sp[static_cast<std::size_t>(c)] += fd;
        sm[static_cast<std::size_t>(c)] -= fd;
        grad[static_cast<std::size_t>(c)] = (augmented(sp) - augmented(sm)) / (2 * fd);
      }
      // step scaled so alpha = 1 cannot jump past the box
      double gnorm = 0.0;
      for (int c = 0; c < 3; ++c)
        gnorm = std::max(gnorm, std::abs(grad[static_cast<std::size_t>(c)]) *
                                    std::max(scale[static_cast<std::size_t>(c)], 1e-30));
      if (gnorm == 0.0) break;
      double l_here = augmented(s);
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-10) {
        // at alpha = 1 the largest component moves by its box half-width
        std::array<double, 3> trial = s;
        for (int c = 0; c < 3; ++c)
          trial[static_cast<std::size_t>(c)] -= alpha * grad[static_cast<std::size_t>(c)] *
                                                scale[static_cast<std::size_t>(c)] / gnorm;
        trial = clamp_box(trial, lo, hi);
        if (augmented(trial) < l_here - 1e-15 * std::max(1.0, std::abs(l_here))) {
          s = trial;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      if (min_g(s) >= -p.tol_g && objective(s) < best_obj) {
        best = s;
        best_obj = objective(s);
      }
    }

    std::vector<double> g = constraints(s);
    double violation = 0.0;
    for (std::size_t k = 0; k < n_con; ++k) {
      lambda[k] = std::max(0.0, lambda[k] - mu * g[k]);
      violation = std::max(violation, std::max(0.0, -g[k]));
    }
    if (violation <= p.tol_g && outer > 0) {
      if (objective(s) < best_obj) {
        best = s;
        best_obj = objective(s);
      }
    }
    if (violation > 0.25 * prev_violation) mu *= 2.0;
    prev_violation = violation;
  }

  // feasible coordinate-descent polish from the best feasible iterate; also
  // certifies first-order stationarity at the step_tol scale
  std::array<double, 3> sbest = best;
  for (double frac = 0.5; ; frac *= 0.5) {
    double biggest = 0.0;
    for (int c = 0; c < 3; ++c)
      biggest = std::max(biggest, frac * bound[static_cast<std::size_t>(c)]);
    if (biggest < p.step_tol) break;
    bool improved = true;
    while (improved) {
      improved = false;
      for (int c = 0; c < 3; ++c) {
        double delta = frac * bound[static_cast<std::size_t>(c)];
        if (delta == 0.0) continue;
        for (double sign : {-1.0, 1.0}) {
          std::array<double, 3> trial = sbest;
          trial[static_cast<std::size_t>(c)] =
              std::clamp(trial[static_cast<std::size_t>(c)] + sign * delta,
                         lo[static_cast<std::size_t>(c)], hi[static_cast<std::size_t>(c)]);
          if (trial == sbest) continue;
          if (min_g(trial) < -p.tol_g) continue;
          double obj = objective(trial);
          if (obj < best_obj - p.tol_f) {
            sbest = trial;
            best_obj = obj;
            improved = true;
          }
        }
      }
    }
  }

  return from_array(sbest);
}

struct LandscapeSlice {
  std::vector<std::pair<double, double>> theta;  // (theta, psi) through the slice point
  std::vector<std::pair<double, double>> r1;     // (r1, psi)
};

inline LandscapeSlice energy_landscape(const RbdProblem &p, const RigidState &at, int samples = 101,
                                       double theta_half_range = kPi, double r1_half_range = 1.0) {
  LandscapeSlice out;
  for (int k = 0; k < samples; ++k) {
    double th = at.theta - theta_half_range + 2.0 * theta_half_range * k / (samples - 1);
    out.theta.push_back({th, potential_energy(p, {th, at.r0, at.r1})});
    double r1 = at.r1 - r1_half_range + 2.0 * r1_half_range * k / (samples - 1);
    out.r1.push_back({r1, potential_energy(p, {at.theta, at.r0, r1})});
  }
  return out;
}

}  // namespace rbd

}  // namespace meltsim
