#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "losnav/geometry.hpp"

namespace losnav {

class OriginOccludedError : public std::runtime_error {
 public:
  OriginOccludedError() : std::runtime_error("ray origin lies inside an obstacle") {}
};

class CommandOutOfRangeError : public std::runtime_error {
 public:
  CommandOutOfRangeError() : std::runtime_error("velocity command exceeds configured limits") {}
};

struct Disc {
  Vec2 center;
  double radius = 0.0;
  bool operator==(const Disc&) const = default;
};

// Axis-aligned rectangle, min strictly below max component-wise.
struct Rect {
  Vec2 min;
  Vec2 max;
  bool operator==(const Rect&) const = default;
};

struct Obstacle {
  std::string id;
  std::variant<Disc, Rect> shape;
};

struct Device {
  std::string id;
  Vec2 position;
};

struct VelocityCommand {
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s
  bool operator==(const VelocityCommand&) const = default;
};

struct KinematicLimits {
  double v_max = 1.0;      // m/s
  double omega_max = 2.0;  // rad/s
};

// Ultrasonic ranger model: three rays from the body center at
// heading + delta_left, heading, heading - delta_right.
struct SensorConfig {
  double delta_left = deg2rad(60.0);
  double delta_right = deg2rad(60.0);
  double max_range = 4.0;  // meters
  double noise = 0.0;      // uniform +/- amplitude, meters; 0 = noiseless
};

struct UltrasonicReading {
  double left = 0.0;
  double front = 0.0;
  double right = 0.0;
  bool operator==(const UltrasonicReading&) const = default;
};

// Ground-truth environment: static obstacles, devices to serve, arena bounds
// and the robot body (a circle of mrp_radius around the pose).
struct WorldModel {
  std::vector<Obstacle> obstacles;
  std::vector<Device> devices;
  Rect bounds{{-10.0, -10.0}, {10.0, 10.0}};
  Pose2D mrp;
  double mrp_radius = 0.3;
  bool walls_solid = true;  // arena walls block rays and count as collision
  KinematicLimits limits;
};

namespace detail {

inline bool strictly_inside(Vec2 p, const Disc& d) {
  return distance(p, d.center) < d.radius;
}

inline bool strictly_inside(Vec2 p, const Rect& r) {
  return p.x > r.min.x && p.x < r.max.x && p.y > r.min.y && p.y < r.max.y;
}

inline bool strictly_inside(Vec2 p, const Obstacle& o) {
  return std::visit([&](const auto& s) { return strictly_inside(p, s); }, o.shape);
}

inline Vec2 closest_point(Vec2 p, const Rect& r) {
  return {std::clamp(p.x, r.min.x, r.max.x), std::clamp(p.y, r.min.y, r.max.y)};
}

// Distance from p to the obstacle surface; negative means inside.
inline double surface_distance(Vec2 p, const Obstacle& o) {
  if (const auto* d = std::get_if<Disc>(&o.shape)) {
    return distance(p, d->center) - d->radius;
  }
  const auto& r = std::get<Rect>(o.shape);
  if (strictly_inside(p, r)) {
    const double dx = std::min(p.x - r.min.x, r.max.x - p.x);
    const double dy = std::min(p.y - r.min.y, r.max.y - p.y);
    return -std::min(dx, dy);
  }
  return distance(p, closest_point(p, r));
}

inline constexpr double kRayEps = 1e-9;

inline std::optional<double> ray_disc(Vec2 o, Vec2 dir, const Disc& d) {
  const Vec2 oc = d.center - o;
  const double b = dot(dir, oc);
  const double det = b * b - (dot(oc, oc) - d.radius * d.radius);
  if (det < 0.0) return std::nullopt;
  const double s = std::sqrt(det);
  if (b - s > kRayEps) return b - s;
  if (b + s > kRayEps) return b + s;  // origin on the boundary, exiting hit
  return std::nullopt;
}

inline std::optional<double> ray_rect(Vec2 o, Vec2 dir, const Rect& r) {
  double t_enter = 0.0;
  double t_exit = std::numeric_limits<double>::infinity();
  const double po[2] = {o.x, o.y};
  const double pd[2] = {dir.x, dir.y};
  const double lo[2] = {r.min.x, r.min.y};
  const double hi[2] = {r.max.x, r.max.y};
  for (int i = 0; i < 2; ++i) {
    if (std::abs(pd[i]) < 1e-15) {
      if (po[i] < lo[i] || po[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t0 = (lo[i] - po[i]) / pd[i];
    double t1 = (hi[i] - po[i]) / pd[i];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter > t_exit) return std::nullopt;
  if (t_enter > kRayEps) return t_enter;
  return std::nullopt;  // origin inside or on the boundary
}

}  // namespace detail

// Distance to the first obstacle boundary along the ray, or nullopt when
// nothing is hit within max_range. `include_walls` makes the arena bounds a
// hittable surface (from the inside).
inline std::optional<double> ray_cast(Vec2 origin, double direction, double max_range,
                                      const WorldModel& world, bool include_walls) {
  if (!(max_range > 0.0)) throw std::invalid_argument("ray_cast: max_range must be > 0");
  for (const auto& ob : world.obstacles) {
    if (detail::strictly_inside(origin, ob)) throw OriginOccludedError{};
  }
  const Vec2 dir{std::cos(direction), std::sin(direction)};
  std::optional<double> best;
  auto consider = [&](std::optional<double> t) {
    if (t && *t <= max_range && (!best || *t < *best)) best = t;
  };
  for (const auto& ob : world.obstacles) {
    if (const auto* d = std::get_if<Disc>(&ob.shape)) {
      consider(detail::ray_disc(origin, dir, *d));
    } else {
      consider(detail::ray_rect(origin, dir, std::get<Rect>(ob.shape)));
    }
  }
  if (include_walls) {
    // Exit distance out of the bounds rectangle, taken from the inside.
    double t_exit = std::numeric_limits<double>::infinity();
    if (dir.x > 1e-15) t_exit = std::min(t_exit, (world.bounds.max.x - origin.x) / dir.x);
    if (dir.x < -1e-15) t_exit = std::min(t_exit, (world.bounds.min.x - origin.x) / dir.x);
    if (dir.y > 1e-15) t_exit = std::min(t_exit, (world.bounds.max.y - origin.y) / dir.y);
    if (dir.y < -1e-15) t_exit = std::min(t_exit, (world.bounds.min.y - origin.y) / dir.y);
    if (std::isfinite(t_exit) && t_exit > detail::kRayEps) consider(t_exit);
  }
  return best;
}

inline std::optional<double> ray_cast(Vec2 origin, double direction, double max_range,
                                      const WorldModel& world) {
  return ray_cast(origin, direction, max_range, world, world.walls_solid);
}

// Three-ray ultrasonic scan from the body center, saturated at max_range.
// Optional rng enables the uniform noise knob.
inline UltrasonicReading ultrasonic_read(const WorldModel& world, const SensorConfig& cfg,
                                         std::mt19937* rng = nullptr) {
  auto range = [&](double offset) {
    const auto hit = ray_cast(world.mrp.position, wrap_angle(world.mrp.heading + offset),
                              cfg.max_range, world);
    double r = hit.value_or(cfg.max_range);
    if (rng != nullptr && cfg.noise > 0.0) {
      const double u = static_cast<double>((*rng)()) / 4294967296.0;  // [0,1)
      r = std::clamp(r + (2.0 * u - 1.0) * cfg.noise, 0.0, cfg.max_range);
    }
    return r;
  };
  return {range(cfg.delta_left), range(0.0), range(-cfg.delta_right)};
}

// Unicycle step: heading advances by omega*dt, position by v*dt along the
// midpoint heading. Second-order accurate, closed form, deterministic.
inline Pose2D step_kinematics(const Pose2D& pose, const VelocityCommand& cmd, double dt,
                              const KinematicLimits& limits = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_kinematics: dt must be > 0");
  if (std::abs(cmd.linear) > limits.v_max || std::abs(cmd.angular) > limits.omega_max) {
    throw CommandOutOfRangeError{};
  }
  const double mid = pose.heading + cmd.angular * dt / 2.0;
  Pose2D next;
  next.position = pose.position + (cmd.linear * dt) * Vec2{std::cos(mid), std::sin(mid)};
  next.heading = wrap_angle(pose.heading + cmd.angular * dt);
  return next;
}

// True iff the body circle overlaps any obstacle or exits the arena bounds.
inline bool check_collision(const WorldModel& world) {
  const Vec2 p = world.mrp.position;
  const double r = world.mrp_radius;
  for (const auto& ob : world.obstacles) {
    if (detail::surface_distance(p, ob) < r) return true;
  }
  if (world.walls_solid) {
    if (p.x - r < world.bounds.min.x || p.x + r > world.bounds.max.x ||
        p.y - r < world.bounds.min.y || p.y + r > world.bounds.max.y) {
      return true;
    }
  }
  return false;
}

namespace detail {

inline bool segment_hits(Vec2 a, Vec2 b, const Disc& d) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(d.center - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(a + t * ab, d.center) < d.radius;
}

inline bool segment_hits(Vec2 a, Vec2 b, const Rect& r) {
  // Liang-Barsky clip of the parametric segment against the slab bounds.
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-(b.x - a.x), b.x - a.x, -(b.y - a.y), b.y - a.y};
  const double q[4] = {a.x - r.min.x, r.max.x - a.x, a.y - r.min.y, r.max.y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
  }
  return t0 < t1;  // tangential corner contact does not block
}

}  // namespace detail

// True iff the open segment (a, b) crosses no obstacle. Walls never block
// sight; only obstacles obstruct the wireless link.
inline bool line_of_sight(Vec2 a, Vec2 b, const WorldModel& world) {
  if (distance(a, b) < kCoincidentEps) {
    throw std::invalid_argument("line_of_sight: endpoints coincide");
  }
  for (const auto& ob : world.obstacles) {
    const bool blocked = std::visit(
        [&](const auto& s) { return detail::segment_hits(a, b, s); }, ob.shape);
    if (blocked) return false;
  }
  return true;
}

}  // namespace losnav
