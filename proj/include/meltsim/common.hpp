#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace meltsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2 &o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2 &o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 &operator+=(const Vec2 &o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2 &o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2 &v) { return v * s; }

// 90-degree counterclockwise rotation: perp(a, b) = (-b, a).
inline Vec2 perp(const Vec2 &v) { return {-v.y, v.x}; }

// Rigid 2D map x -> R x + d, composable.
struct Affine2 {
  double r00 = 1.0, r01 = 0.0, r10 = 0.0, r11 = 1.0;
  Vec2 d;

  static Affine2 identity() { return {}; }

  // Rotation by theta about pivot, then translation by shift.
  static Affine2 rigid(double theta, const Vec2 &shift, const Vec2 &pivot) {
    Affine2 a;
    a.r00 = std::cos(theta);
    a.r01 = -std::sin(theta);
    a.r10 = std::sin(theta);
    a.r11 = std::cos(theta);
    Vec2 rp{a.r00 * pivot.x + a.r01 * pivot.y, a.r10 * pivot.x + a.r11 * pivot.y};
    a.d = pivot - rp + shift;
    return a;
  }

  Vec2 apply(const Vec2 &p) const {
    return {r00 * p.x + r01 * p.y + d.x, r10 * p.x + r11 * p.y + d.y};
  }

  // this after other: (this ∘ other)(p) = this(other(p))
  Affine2 compose(const Affine2 &o) const {
    Affine2 c;
    c.r00 = r00 * o.r00 + r01 * o.r10;
    c.r01 = r00 * o.r01 + r01 * o.r11;
    c.r10 = r10 * o.r00 + r11 * o.r10;
    c.r11 = r10 * o.r01 + r11 * o.r11;
    c.d = apply(o.d);
    return c;
  }
};

class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

inline constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace meltsim
