#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "losnav/geometry.hpp"
#include "losnav/world.hpp"

namespace losnav {

class DegenerateProjectionError : public std::runtime_error {
 public:
  DegenerateProjectionError()
      : std::runtime_error("object point coincides with the camera origin") {}
};

class InvalidDistanceError : public std::invalid_argument {
 public:
  InvalidDistanceError() : std::invalid_argument("estimated distance is negative") {}
};

// Image-plane partition: the considered band is the lower height_fraction of
// the frame (the top is discarded), with side margins carving out the left
// and right reference areas.
struct ZoneConfig {
  double side_margin = 0.25;
  double height_fraction = 0.75;
};

// Single pinhole abstraction of the platform's cameras. mount_height sets the
// depression angle toward ground-plane object points.
struct CameraConfig {
  double horizontal_fov = deg2rad(120.0);
  double vertical_fov = deg2rad(90.0);
  double mount_height = 0.4;  // meters above the ground plane
};

struct ProximityConfig {
  double obstacle_threshold = 1.0;     // meters
  double device_serve_distance = 2.0;  // meters
};

enum class DetectionKind { Obstacle, Device };
enum class Zone { Left, Front, Right, Ignored };

// Normalized image coordinates: u in [0,1] left-to-right, v in [0,1]
// top-to-bottom.
struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

struct Detection {
  DetectionKind kind = DetectionKind::Obstacle;
  Zone zone = Zone::Front;
  std::optional<double> est_distance;  // meters
  bool close = false;
  std::string source_id;
  bool operator==(const Detection&) const = default;
};

struct DetectionReport {
  std::uint64_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  std::vector<Detection> detections;
  bool operator==(const DetectionReport&) const = default;
};

// Projects a ground point into the normalized image plane. Returns nullopt
// when the point falls outside the field of view.
inline std::optional<ImagePoint> project_to_image(const Pose2D& mrp, Vec2 object_point,
                                                  const CameraConfig& cam) {
  const double range = distance(mrp.position, object_point);
  if (range < kCoincidentEps) throw DegenerateProjectionError{};
  const double rel = bearing(mrp, object_point);
  if (std::abs(rel) > cam.horizontal_fov / 2.0) return std::nullopt;
  const double u = 0.5 - rel / cam.horizontal_fov;  // CCW-positive bearing -> left edge
  const double depression = std::atan2(cam.mount_height, range);
  const double v = 0.5 + depression / cam.vertical_fov;
  if (v < 0.0 || v > 1.0) return std::nullopt;
  return ImagePoint{u, v};
}

// Zone partition per the reference areas: the top (1 - height_fraction) band
// is ignored; side margins map to Left/Right; ties on the margin boundaries
// go to Front.
inline Zone classify_zone(ImagePoint p, const ZoneConfig& zones) {
  if (p.v < 1.0 - zones.height_fraction) return Zone::Ignored;
  if (p.u < zones.side_margin) return Zone::Left;
  if (p.u > 1.0 - zones.side_margin) return Zone::Right;
  return Zone::Front;
}

// Is the detection close enough to act on: obstacles to avoid, devices to
// serve. Thresholds are inclusive.
inline bool proximity_gate(DetectionKind kind, double est_distance,
                           const ProximityConfig& cfg) {
  if (est_distance < 0.0) throw InvalidDistanceError{};
  return kind == DetectionKind::Obstacle ? est_distance <= cfg.obstacle_threshold
                                         : est_distance <= cfg.device_serve_distance;
}

namespace detail {

inline std::optional<Vec2> nearest_surface_point(Vec2 from, const Obstacle& ob) {
  if (const auto* d = std::get_if<Disc>(&ob.shape)) {
    const double dist = distance(from, d->center);
    if (dist < kCoincidentEps) return std::nullopt;
    return d->center + (-d->radius / dist) * (d->center - from);
  }
  const auto& r = std::get<Rect>(ob.shape);
  const Vec2 p = closest_point(from, r);
  if (distance(from, p) < kCoincidentEps) return std::nullopt;
  return p;
}

}  // namespace detail

// Synthesizes one vision frame from ground truth: every obstacle and device
// is represented by its nearest visible point, projected, zone-classified and
// proximity-gated. Occluded objects (another obstacle blocks the sight line)
// and out-of-view objects are dropped. Detections are ordered by source_id.
inline DetectionReport build_report(const WorldModel& world, const CameraConfig& cam,
                                    const ZoneConfig& zones, const ProximityConfig& prox,
                                    std::uint64_t seq, std::uint64_t timestamp_ms) {
  DetectionReport report{seq, timestamp_ms, {}};
  auto add = [&](DetectionKind kind, const std::string& id, Vec2 point) {
    const double range = distance(world.mrp.position, point);
    if (range < kCoincidentEps) return;
    // Visibility: the sight ray must reach the point before any obstacle.
    if (range > 1e-6) {
      const double angle = std::atan2(point.y - world.mrp.position.y,
                                      point.x - world.mrp.position.x);
      const auto hit = ray_cast(world.mrp.position, angle, range - 1e-6, world,
                                /*include_walls=*/false);
      if (hit) return;  // occluded
    }
    const auto img = project_to_image(world.mrp, point, cam);
    if (!img) return;
    const Zone zone = classify_zone(*img, zones);
    if (zone == Zone::Ignored) return;
    report.detections.push_back(
        {kind, zone, range, proximity_gate(kind, range, prox), id});
  };
  for (const auto& ob : world.obstacles) {
    if (const auto point = detail::nearest_surface_point(world.mrp.position, ob)) {
      add(DetectionKind::Obstacle, ob.id, *point);
    }
  }
  for (const auto& dev : world.devices) {
    add(DetectionKind::Device, dev.id, dev.position);
  }
  std::sort(report.detections.begin(), report.detections.end(),
            [](const Detection& a, const Detection& b) { return a.source_id < b.source_id; });
  return report;
}

}  // namespace losnav
