#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include "losnav/geometry.hpp"
#include "losnav/perception.hpp"
#include "losnav/protocol.hpp"
#include "losnav/world.hpp"

namespace losnav {

class TelemetryLostError : public std::runtime_error {
 public:
  TelemetryLostError() : std::runtime_error("telemetry stream stale or absent") {}
};

struct ControlConfig {
  double default_speed = 0.3;        // m/s
  double forward_interval = 2.0;     // s
  double avoid_angle = deg2rad(30);  // rad, applied clockwise
  double rotation_speed = 0.8;       // rad/s
  double arrival_tolerance = 0.1;    // m
  double heading_tolerance = 0.02;   // rad
  int max_avoid_iterations = 64;
  int max_send_to_recursions = 16;
  double front_stop_distance = 0.5;  // m
  double tick_dt = 0.05;             // s, command issuance cadence

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("ControlConfig.") + name +
                                    " must be strictly positive");
      }
    };
    positive(default_speed, "default_speed");
    positive(forward_interval, "forward_interval");
    positive(avoid_angle, "avoid_angle");
    positive(rotation_speed, "rotation_speed");
    positive(arrival_tolerance, "arrival_tolerance");
    positive(heading_tolerance, "heading_tolerance");
    positive(front_stop_distance, "front_stop_distance");
    positive(tick_dt, "tick_dt");
    if (max_avoid_iterations <= 0) {
      throw std::invalid_argument("ControlConfig.max_avoid_iterations must be strictly positive");
    }
    if (max_send_to_recursions <= 0) {
      throw std::invalid_argument("ControlConfig.max_send_to_recursions must be strictly positive");
    }
    if (!(avoid_angle < kPi)) {
      throw std::invalid_argument("ControlConfig.avoid_angle must be below pi");
    }
  }
};

enum class Mode { Idle, Rotating, MovingForward, Avoiding, Arrived, Failed };
enum class MoveOutcome { Completed, ObstacleDetected, Unreachable, DegenerateTarget };
enum class SendOutcome { Arrived, Unreachable, DegenerateTarget };
enum class EventKind { ObstacleDetected, AvoidStart, AvoidEnd, Arrived, Failed };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Idle: return "Idle";
    case Mode::Rotating: return "Rotating";
    case Mode::MovingForward: return "MovingForward";
    case Mode::Avoiding: return "Avoiding";
    case Mode::Arrived: return "Arrived";
    case Mode::Failed: return "Failed";
  }
  return "?";
}

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::ObstacleDetected: return "ObstacleDetected";
    case EventKind::AvoidStart: return "AvoidStart";
    case EventKind::AvoidEnd: return "AvoidEnd";
    case EventKind::Arrived: return "Arrived";
    case EventKind::Failed: return "Failed";
  }
  return "?";
}

struct ControllerState {
  Mode mode = Mode::Idle;
  std::string failure_reason;
  std::optional<Vec2> target;
  int recursion_depth = 0;
  int avoid_depth = 0;
  bool front_blocked = false;
  std::uint64_t last_report_seq = 0;
  std::uint64_t stale_reports_dropped = 0;
};

// Boundary toward the robot. send_command advances exactly one control tick
// (the in-process simulation integrates dt; the UDP binding waits for the
// acknowledging telemetry), latest_telemetry returns the freshest state and
// throws TelemetryLostError past the 500 ms staleness bound, poll_report
// surfaces the newest pending detection report, if any.
class RobotInterface {
 public:
  virtual ~RobotInterface() = default;
  virtual void send_command(const VelocityCommand& cmd) = 0;
  virtual Telemetry latest_telemetry() = 0;
  virtual std::optional<DetectionReport> poll_report() = 0;
};

class ControlObserver {
 public:
  virtual ~ControlObserver() = default;
  virtual void on_mode(Mode) {}
  virtual void on_event(EventKind, const std::string& detail) { (void)detail; }
};

// Go-to-goal state machine: rotate toward the target, advance in bounded
// intervals, and on a blocked front rotate clockwise in avoid_angle steps
// until clear. All recursion is depth-bounded; exhausting a bound yields
// Unreachable rather than looping.
class Controller {
 public:
  Controller(RobotInterface& io, ControlConfig cfg, ControlObserver* observer = nullptr)
      : io_(io), cfg_(cfg), observer_(observer) {
    cfg_.validate();
  }

  const ControlConfig& config() const { return cfg_; }

  ControllerState state() const {
    std::lock_guard lock(mu_);
    return state_;
  }

  // Optional workspace limits; targets outside are rejected as Unreachable.
  void set_arena_bounds(const Rect& bounds) { arena_bounds_ = bounds; }

  void on_detection_report(const DetectionReport& report) {
    std::lock_guard lock(mu_);
    if (seen_report_ && report.seq < state_.last_report_seq) {
      ++state_.stale_reports_dropped;
      return;
    }
    seen_report_ = true;
    state_.last_report_seq = report.seq;
    vision_front_close_ = false;
    for (const auto& d : report.detections) {
      if (d.kind == DetectionKind::Obstacle && d.zone == Zone::Front && d.close) {
        vision_front_close_ = true;
        break;
      }
    }
    recompute_front_blocked_locked();
  }

  void stop() { io_.send_command({0.0, 0.0}); }

  // Closed-loop in-place rotation at rotation_speed toward the shorter arc.
  // The final tick clamps the rate so the loop cannot limit-cycle around the
  // tolerance window; antipodal targets break the tie counterclockwise.
  void rotate(double target_heading) {
    if (!(target_heading > -kPi && target_heading <= kPi)) {
      throw InvalidAngleError("rotate target heading outside (-pi, pi]");
    }
    set_mode(Mode::Rotating);
    while (true) {
      drain_reports();
      const Telemetry t = fetch_telemetry();
      const double err = wrap_angle(target_heading - t.pose.heading);
      if (std::abs(err) <= cfg_.heading_tolerance) return;
      const double sign = err > 0.0 ? 1.0 : -1.0;
      const double rate = std::min(cfg_.rotation_speed, std::abs(err) / cfg_.tick_dt);
      io_.send_command({0.0, sign * rate});
    }
  }

  // Straight advance for `duration`, checking the fused obstacle condition
  // before every tick; a blocked front stops the platform immediately.
  MoveOutcome forward(double speed, double duration) {
    if (!(speed > 0.0) || !std::isfinite(speed)) {
      throw std::invalid_argument("forward speed must be strictly positive");
    }
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
      throw std::invalid_argument("forward duration must be non-negative");
    }
    if (in_send_to_) {
      if (forward_budget_used_ >= forward_budget_) {
        stop();
        return MoveOutcome::Unreachable;
      }
      ++forward_budget_used_;
    }
    long ticks = std::lround(duration / cfg_.tick_dt);
    if (duration > 0.0 && ticks == 0) ticks = 1;
    if (ticks > 0) set_mode(Mode::MovingForward);
    for (long i = 0; i < ticks; ++i) {
      drain_reports();
      const Telemetry t = fetch_telemetry();
      bool vision_arm = false;
      {
        std::lock_guard lock(mu_);
        vision_arm = vision_front_close_;
      }
      const bool ultrasonic_arm = t.ultrasonic.front < cfg_.front_stop_distance;
      if (vision_arm || ultrasonic_arm) {
        emit(EventKind::ObstacleDetected, ultrasonic_arm ? "ultrasonic" : "vision");
        stop();
        return MoveOutcome::ObstacleDetected;
      }
      io_.send_command({speed, 0.0});
    }
    return MoveOutcome::Completed;
  }

  // Clockwise scan: rotate avoid_angle right, advance when the front reads
  // clear, repeat while blocked. Every pass counts toward the depth bound so
  // an enclosed platform reports Unreachable instead of spinning forever.
  MoveOutcome avoid() {
    set_mode(Mode::Avoiding);
    emit(EventKind::AvoidStart, "");
    {
      std::lock_guard lock(mu_);
      state_.avoid_depth = 0;
    }
    while (true) {
      {
        std::lock_guard lock(mu_);
        if (state_.avoid_depth >= cfg_.max_avoid_iterations) break;
        ++state_.avoid_depth;
      }
      const Telemetry t = fetch_telemetry();
      rotate(wrap_angle(t.pose.heading - cfg_.avoid_angle));
      set_mode(Mode::Avoiding);
      if (!front_blocked_now()) {
        const MoveOutcome r = forward(cfg_.default_speed, cfg_.forward_interval);
        set_mode(Mode::Avoiding);
        if (r == MoveOutcome::Completed) {
          emit(EventKind::AvoidEnd, "");
          return MoveOutcome::Completed;
        }
        if (r == MoveOutcome::Unreachable) return MoveOutcome::Unreachable;
      }
    }
    stop();
    return MoveOutcome::Unreachable;
  }

  // Recursive go-to-goal: face the target, advance one interval, re-aim;
  // obstacle hits hand off to avoid and count toward the recursion bound.
  SendOutcome send_to(const Vec2& target) {
    if (!is_finite(target)) throw std::invalid_argument("send_to target must be finite");
    {
      std::lock_guard lock(mu_);
      state_.target = target;
      state_.recursion_depth = 0;
      state_.avoid_depth = 0;
      state_.failure_reason.clear();
    }
    if (arena_bounds_ && !inside_bounds(target, *arena_bounds_)) {
      fail("target outside arena bounds");
      return SendOutcome::Unreachable;
    }
    struct ScopeFlag {
      bool& flag;
      ~ScopeFlag() { flag = false; }
    } guard{in_send_to_};
    in_send_to_ = true;
    forward_budget_used_ = 0;
    forward_budget_ = static_cast<long>(cfg_.max_send_to_recursions) *
                      (static_cast<long>(cfg_.max_avoid_iterations) + 1);

    // Degenerate target: already within tolerance, zero commands issued.
    {
      const Telemetry t = fetch_telemetry();
      if (distance(t.pose.position, target) <= cfg_.arrival_tolerance) {
        set_mode(Mode::Arrived);
        emit(EventKind::Arrived, "degenerate target");
        return SendOutcome::Arrived;
      }
    }
    while (true) {
      const Telemetry t = fetch_telemetry();
      const Vec2 here = t.pose.position;
      const double dist = distance(here, target);
      if (dist <= cfg_.arrival_tolerance) {
        stop();
        set_mode(Mode::Arrived);
        emit(EventKind::Arrived, "");
        return SendOutcome::Arrived;
      }
      const double heading_to_target =
          wrap_angle(std::atan2(target.y - here.y, target.x - here.x));
      rotate(heading_to_target);
      const MoveOutcome r =
          forward(cfg_.default_speed, std::min(cfg_.forward_interval, dist / cfg_.default_speed));
      if (r == MoveOutcome::Completed) continue;
      if (r == MoveOutcome::Unreachable) {
        fail("forward budget exhausted");
        return SendOutcome::Unreachable;
      }
      bool over_bound = false;
      {
        std::lock_guard lock(mu_);
        if (state_.recursion_depth >= cfg_.max_send_to_recursions) {
          over_bound = true;
        } else {
          ++state_.recursion_depth;
        }
      }
      if (over_bound) {
        stop();
        fail("send_to recursion bound exhausted");
        return SendOutcome::Unreachable;
      }
      const MoveOutcome a = avoid();
      if (a != MoveOutcome::Completed) {
        fail("avoid iterations exhausted");
        return SendOutcome::Unreachable;
      }
    }
  }

 private:
  static bool inside_bounds(const Vec2& p, const Rect& r) {
    return p.x >= r.min.x && p.x <= r.max.x && p.y >= r.min.y && p.y <= r.max.y;
  }

  void drain_reports() {
    while (auto r = io_.poll_report()) on_detection_report(*r);
  }

  Telemetry fetch_telemetry() {
    const Telemetry t = io_.latest_telemetry();
    std::lock_guard lock(mu_);
    last_ultrasonic_front_ = t.ultrasonic.front;
    recompute_front_blocked_locked();
    return t;
  }

  bool front_blocked_now() {
    drain_reports();
    fetch_telemetry();
    std::lock_guard lock(mu_);
    return state_.front_blocked;
  }

  void recompute_front_blocked_locked() {
    state_.front_blocked =
        vision_front_close_ || last_ultrasonic_front_ < cfg_.front_stop_distance;
  }

  void set_mode(Mode m) {
    {
      std::lock_guard lock(mu_);
      if (state_.mode == m) return;
      state_.mode = m;
    }
    if (observer_) observer_->on_mode(m);
  }

  void fail(const std::string& reason) {
    bool changed = false;
    {
      std::lock_guard lock(mu_);
      changed = state_.mode != Mode::Failed;
      state_.mode = Mode::Failed;
      state_.failure_reason = reason;
    }
    if (changed && observer_) observer_->on_mode(Mode::Failed);
    emit(EventKind::Failed, reason);
  }

  void emit(EventKind kind, const std::string& detail) {
    if (observer_) observer_->on_event(kind, detail);
  }

  RobotInterface& io_;
  ControlConfig cfg_;
  ControlObserver* observer_ = nullptr;
  std::optional<Rect> arena_bounds_;

  mutable std::mutex mu_;
  ControllerState state_;
  bool seen_report_ = false;
  bool vision_front_close_ = false;
  double last_ultrasonic_front_ = std::numeric_limits<double>::infinity();

  bool in_send_to_ = false;
  long forward_budget_ = 0;
  long forward_budget_used_ = 0;
};

}  // namespace losnav
