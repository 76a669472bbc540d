#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace losnav {

inline constexpr double kPi = std::numbers::pi;

// Targets closer than this are treated as coincident with the robot; below
// any physical arrival tolerance, guards the atan2 degeneracy.
inline constexpr double kCoincidentEps = 1e-9;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }

class InvalidAngleError : public std::domain_error {
 public:
  InvalidAngleError() : std::domain_error("angle is not finite") {}
  explicit InvalidAngleError(const char* what) : std::domain_error(what) {}
};

class DegenerateBearingError : public std::domain_error {
 public:
  DegenerateBearingError()
      : std::domain_error("bearing target coincides with position") {}
};

// Planar vector in world frame, meters. Components must stay finite; every
// ingestion boundary (decode, scenario load) validates before admitting one.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  bool operator==(const Vec2&) const = default;
};

inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Wraps theta into (-pi, pi]. Angles already in range pass through exactly,
// so repeated wrapping is a no-op.
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) throw InvalidAngleError{};
  double r = std::remainder(theta, 2.0 * kPi);  // lands in [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

// Robot pose: position in meters, heading in radians wrapped to (-pi, pi],
// counter-clockwise positive, zero along world +x.
struct Pose2D {
  Vec2 position;
  double heading = 0.0;

  bool operator==(const Pose2D&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }

// Relative heading change needed to face `to` from `from`: the world bearing
// of the target minus the current heading, wrapped.
inline double bearing(const Pose2D& from, Vec2 to) {
  const Vec2 d = to - from.position;
  if (norm(d) < kCoincidentEps) throw DegenerateBearingError{};
  return wrap_angle(std::atan2(d.y, d.x) - from.heading);
}

}  // namespace losnav
