#pragma once

#include <cmath>

#include "meltsim/common.hpp"

namespace meltsim {

// 2D pose (theta, r0, r1). The same triple doubles as a rate when divided by
// time; wrapping of theta is the consumer's concern.
struct RigidState {
  double theta = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;

  RigidState() = default;
  RigidState(double th, double a, double b) : theta(th), r0(a), r1(b) {}

  RigidState operator+(const RigidState &o) const { return {theta + o.theta, r0 + o.r0, r1 + o.r1}; }
  RigidState operator-(const RigidState &o) const { return {theta - o.theta, r0 - o.r0, r1 - o.r1}; }
  RigidState operator*(double s) const { return {theta * s, r0 * s, r1 * s}; }

  Vec2 translation() const { return {r0, r1}; }

  // Body-frame point mapped to the world frame.
  Vec2 apply(const Vec2 &p) const {
    double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x - s * p.y + r0, s * p.x + c * p.y + r1};
  }
};

}  // namespace meltsim
