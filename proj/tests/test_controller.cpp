// Tests for the go-to-goal controller: rotation convergence, bounded forward
// intervals with the fused obstacle check, the clockwise avoidance scan, the
// recursive send_to loop with its depth and budget bounds, and report
// staleness handling.
//
// Annotations: [P] pinned behavior frozen from hand-derived geometry,
// [O] property checked against an independent reimplementation, [T] trivial
// contract check. The robot side is either MiniSim (exact kinematic
// integration of every issued command against a ground-truth world) or
// ScriptedIo (fully canned responses for exact tick accounting).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "losnav/controller.hpp"
#include "losnav/geometry.hpp"
#include "losnav/perception.hpp"
#include "losnav/world.hpp"

#include "support/oracle_helpers.hpp"

namespace {

using namespace losnav;

WorldModel empty_world() {
  WorldModel w;
  w.bounds = {{-10.0, -10.0}, {10.0, 10.0}};
  w.mrp = {{0.0, 0.0}, 0.0};
  w.mrp_radius = 0.2;
  return w;
}

Telemetry clear_telemetry() {
  Telemetry t;
  t.ultrasonic = {4.0, 4.0, 4.0};
  return t;
}

Detection make_det(DetectionKind kind, Zone zone, std::optional<double> est, bool close,
                   std::string id) {
  Detection d;
  d.kind = kind;
  d.zone = zone;
  d.est_distance = est;
  d.close = close;
  d.source_id = std::move(id);
  return d;
}

class Recorder : public ControlObserver {
 public:
  void on_mode(Mode m) override { modes.push_back(m); }
  void on_event(EventKind k, const std::string& detail) override {
    events.emplace_back(k, detail);
  }

  int count(EventKind k) const {
    int n = 0;
    for (const auto& [kind, detail] : events) n += kind == k ? 1 : 0;
    return n;
  }

  bool has_subsequence(std::initializer_list<EventKind> pattern) const {
    auto it = pattern.begin();
    for (const auto& [kind, detail] : events) {
      if (it == pattern.end()) break;
      if (kind == *it) ++it;
    }
    return it == pattern.end();
  }

  std::vector<Mode> modes;
  std::vector<std::pair<EventKind, std::string>> events;
};

// Integrates every issued command against a ground-truth world, exposing the
// same telemetry a real platform would assemble.
class MiniSim : public RobotInterface {
 public:
  MiniSim(WorldModel world, const ControlConfig& cfg)
      : world_(std::move(world)), dt_(cfg.tick_dt) {}

  void send_command(const VelocityCommand& cmd) override {
    sent.push_back(cmd);
    world_.mrp = step_kinematics(world_.mrp, cmd, dt_);
    last_cmd_ = cmd;
    ++ticks;
    if (check_collision(world_)) collided = true;
    for (const auto& ob : world_.obstacles) {
      min_clearance = std::min(
          min_clearance,
          oracle::signed_surface_distance(world_.mrp.position, ob) - world_.mrp_radius);
    }
  }

  Telemetry latest_telemetry() override {
    Telemetry t;
    t.seq = ++seq_;
    t.timestamp_ms = static_cast<std::uint64_t>(ticks) * 50;
    t.pose = world_.mrp;
    t.velocity = last_cmd_;
    t.imu = {world_.mrp.heading, 0.0, 0.0};
    t.ultrasonic = ultrasonic_read(world_, sensor_);
    return t;
  }

  std::optional<DetectionReport> poll_report() override { return std::nullopt; }

  const Pose2D& pose() const { return world_.mrp; }

  std::vector<VelocityCommand> sent;
  long ticks = 0;
  bool collided = false;
  double min_clearance = std::numeric_limits<double>::infinity();

 private:
  WorldModel world_;
  double dt_;
  SensorConfig sensor_{};
  VelocityCommand last_cmd_{0.0, 0.0};
  std::uint64_t seq_ = 0;
};

class ScriptedIo : public RobotInterface {
 public:
  void send_command(const VelocityCommand& cmd) override { sent.push_back(cmd); }

  Telemetry latest_telemetry() override {
    if (lose_telemetry) throw TelemetryLostError{};
    return tele;
  }

  std::optional<DetectionReport> poll_report() override {
    if (reports.empty()) return std::nullopt;
    DetectionReport r = reports.front();
    reports.pop_front();
    return r;
  }

  std::vector<VelocityCommand> sent;
  std::deque<DetectionReport> reports;
  Telemetry tele = clear_telemetry();
  bool lose_telemetry = false;
};

bool all_rotation_only(const std::vector<VelocityCommand>& cmds) {
  for (const auto& c : cmds) {
    if (c.linear != 0.0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// ControlConfig::validate

TEST(ControlConfigValidate, DefaultsAreValid) {
  EXPECT_NO_THROW(ControlConfig{}.validate());
}

TEST(ControlConfigValidate, RejectsNonPositiveAndNonFinite) {
  auto expect_invalid = [](auto mutate) {
    ControlConfig cfg;
    mutate(cfg);
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
  };
  expect_invalid([](ControlConfig& c) { c.default_speed = 0.0; });
  expect_invalid([](ControlConfig& c) { c.forward_interval = -1.0; });
  expect_invalid([](ControlConfig& c) { c.avoid_angle = 0.0; });
  expect_invalid([](ControlConfig& c) { c.avoid_angle = kPi; });  // must stay below pi
  expect_invalid([](ControlConfig& c) { c.rotation_speed = std::nan(""); });
  expect_invalid([](ControlConfig& c) { c.arrival_tolerance = 0.0; });
  expect_invalid([](ControlConfig& c) { c.heading_tolerance = -0.1; });
  expect_invalid([](ControlConfig& c) { c.front_stop_distance = 0.0; });
  expect_invalid([](ControlConfig& c) { c.tick_dt = 0.0; });
  expect_invalid([](ControlConfig& c) { c.max_avoid_iterations = 0; });
  expect_invalid([](ControlConfig& c) { c.max_send_to_recursions = -1; });
}

// ---------------------------------------------------------------------------
// rotate

TEST(Rotate, RejectsUnwrappedTargets) {
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  EXPECT_THROW(ctl.rotate(3.2), InvalidAngleError);
  EXPECT_THROW(ctl.rotate(-kPi), InvalidAngleError);  // open lower bound
  EXPECT_THROW(ctl.rotate(std::nan("")), InvalidAngleError);
  EXPECT_TRUE(io.sent.empty());
  EXPECT_EQ(ctl.state().mode, Mode::Idle);
}

TEST(Rotate, AlignedHeadingIssuesNoCommands) {
  ScriptedIo io;
  io.tele.pose.heading = 0.5;
  Controller ctl(io, ControlConfig{});
  ctl.rotate(0.51);  // within the 0.02 rad tolerance
  EXPECT_TRUE(io.sent.empty());
  EXPECT_EQ(ctl.state().mode, Mode::Rotating);
}

TEST(Rotate, PiTargetAcceptedAtBoundary) {
  ScriptedIo io;
  io.tele.pose.heading = kPi;
  Controller ctl(io, ControlConfig{});
  EXPECT_NO_THROW(ctl.rotate(kPi));
  EXPECT_TRUE(io.sent.empty());
}

TEST(Rotate, ConvergesAlongShorterArc) {
  // CCW case: +2.0 from 0.
  MiniSim ccw(empty_world(), ControlConfig{});
  Controller c1(ccw, ControlConfig{});
  c1.rotate(2.0);
  ASSERT_FALSE(ccw.sent.empty());
  EXPECT_TRUE(all_rotation_only(ccw.sent));
  for (const auto& cmd : ccw.sent) EXPECT_GT(cmd.angular, 0.0);
  EXPECT_LE(std::abs(wrap_angle(2.0 - ccw.pose().heading)), 0.02);

  // CW case: -2.0 from 0.
  MiniSim cw(empty_world(), ControlConfig{});
  Controller c2(cw, ControlConfig{});
  c2.rotate(-2.0);
  ASSERT_FALSE(cw.sent.empty());
  for (const auto& cmd : cw.sent) EXPECT_LT(cmd.angular, 0.0);
  EXPECT_LE(std::abs(wrap_angle(-2.0 - cw.pose().heading)), 0.02);
}

TEST(Rotate, AntipodalTargetBreaksTieCounterclockwise) {
  // [P] from heading 0 the pi target is exactly antipodal; the tie goes CCW.
  MiniSim sim(empty_world(), ControlConfig{});
  Controller ctl(sim, ControlConfig{});
  ctl.rotate(kPi);
  ASSERT_FALSE(sim.sent.empty());
  EXPECT_GT(sim.sent.front().angular, 0.0);
  EXPECT_TRUE(all_rotation_only(sim.sent));
  EXPECT_LE(std::abs(wrap_angle(kPi - sim.pose().heading)), 0.02);
  // No limit cycling: the turn finishes within the ideal tick count plus one.
  EXPECT_LE(static_cast<double>(sim.sent.size()), kPi / (0.8 * 0.05) + 1.0);
}

TEST(Rotate, FinalTickClampsRateForExactConvergence) {
  // [P] a 0.03 rad error at 0.05 s per tick clamps to 0.6 rad/s and lands
  // exactly on target in one command.
  MiniSim sim(empty_world(), ControlConfig{});
  Controller ctl(sim, ControlConfig{});
  ctl.rotate(0.03);
  ASSERT_EQ(sim.sent.size(), 1u);
  EXPECT_DOUBLE_EQ(sim.sent[0].angular, 0.6);
  EXPECT_DOUBLE_EQ(sim.sent[0].linear, 0.0);
  EXPECT_NEAR(sim.pose().heading, 0.03, 1e-12);
}

// ---------------------------------------------------------------------------
// forward

TEST(Forward, ExactTickAccounting) {
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  EXPECT_EQ(ctl.forward(0.3, 2.0), MoveOutcome::Completed);
  EXPECT_EQ(io.sent.size(), 40u);  // [P] 2.0 s / 0.05 s
  for (const auto& cmd : io.sent) {
    EXPECT_DOUBLE_EQ(cmd.linear, 0.3);
    EXPECT_DOUBLE_EQ(cmd.angular, 0.0);
  }
  EXPECT_EQ(ctl.state().mode, Mode::MovingForward);
}

TEST(Forward, DurationRounding) {
  {
    ScriptedIo io;
    Controller ctl(io, ControlConfig{});
    EXPECT_EQ(ctl.forward(0.3, 0.0), MoveOutcome::Completed);
    EXPECT_TRUE(io.sent.empty());
    EXPECT_EQ(ctl.state().mode, Mode::Idle);  // zero ticks never enter MovingForward
  }
  {
    ScriptedIo io;
    Controller ctl(io, ControlConfig{});
    EXPECT_EQ(ctl.forward(0.3, 0.01), MoveOutcome::Completed);
    EXPECT_EQ(io.sent.size(), 1u);  // sub-tick durations still issue one tick
  }
  {
    ScriptedIo io;
    Controller ctl(io, ControlConfig{});
    EXPECT_EQ(ctl.forward(0.3, 0.125), MoveOutcome::Completed);
    EXPECT_EQ(io.sent.size(), 3u);  // lround(2.5) rounds away from zero
  }
}

TEST(Forward, RejectsBadArguments) {
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  EXPECT_THROW(ctl.forward(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ctl.forward(-0.3, 1.0), std::invalid_argument);
  EXPECT_THROW(ctl.forward(std::nan(""), 1.0), std::invalid_argument);
  EXPECT_THROW(ctl.forward(0.3, -1.0), std::invalid_argument);
  EXPECT_THROW(ctl.forward(0.3, std::nan("")), std::invalid_argument);
  EXPECT_TRUE(io.sent.empty());
}

TEST(Forward, UltrasonicArmStopsBeforeFirstTick) {
  // [P] front sonar below front_stop_distance at entry: no motion at all,
  // one halt command, event detail names the ultrasonic arm.
  WorldModel w = empty_world();
  w.obstacles.push_back({"wall", Disc{{0.6, 0.0}, 0.2}});  // sonar reads 0.4
  MiniSim sim(w, ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.forward(0.3, 2.0), MoveOutcome::ObstacleDetected);
  ASSERT_EQ(sim.sent.size(), 1u);
  EXPECT_DOUBLE_EQ(sim.sent[0].linear, 0.0);
  EXPECT_DOUBLE_EQ(sim.sent[0].angular, 0.0);
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_EQ(rec.events[0].first, EventKind::ObstacleDetected);
  EXPECT_EQ(rec.events[0].second, "ultrasonic");
}

TEST(Forward, StopsPartwayWhenSonarThresholdCrossed) {
  WorldModel w = empty_world();
  w.obstacles.push_back({"d", Disc{{1.0, 0.0}, 0.2}});  // surface at 0.8 m
  MiniSim sim(w, ControlConfig{});
  Controller ctl(sim, ControlConfig{});
  EXPECT_EQ(ctl.forward(0.3, 4.0), MoveOutcome::ObstacleDetected);
  // Stops once the sonar reads under 0.5: after roughly 0.3 m of travel.
  EXPECT_GT(sim.pose().position.x, 0.25);
  EXPECT_LT(sim.pose().position.x, 0.36);
  EXPECT_FALSE(sim.collided);
  EXPECT_DOUBLE_EQ(sim.sent.back().linear, 0.0);
}

TEST(Forward, VisionArmStopsWithVisionDetail) {
  ScriptedIo io;
  DetectionReport r{1, 0, {make_det(DetectionKind::Obstacle, Zone::Front, 0.8, true, "x")}};
  io.reports.push_back(r);
  Recorder rec;
  Controller ctl(io, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.forward(0.3, 2.0), MoveOutcome::ObstacleDetected);
  ASSERT_EQ(io.sent.size(), 1u);  // only the halt
  EXPECT_DOUBLE_EQ(io.sent[0].linear, 0.0);
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_EQ(rec.events[0].second, "vision");
}

TEST(Forward, NonBlockingDetectionsDoNotStop) {
  // [P] only close obstacles in the Front zone arm the vision stop: left-zone
  // obstacles, devices and far front obstacles all pass.
  ScriptedIo io;
  io.reports.push_back({1, 0, {make_det(DetectionKind::Obstacle, Zone::Left, 0.4, true, "a")}});
  io.reports.push_back({2, 0, {make_det(DetectionKind::Device, Zone::Front, 0.4, true, "b")}});
  io.reports.push_back({3, 0, {make_det(DetectionKind::Obstacle, Zone::Front, 3.0, false, "c")}});
  Controller ctl(io, ControlConfig{});
  EXPECT_EQ(ctl.forward(0.3, 0.1), MoveOutcome::Completed);
  EXPECT_EQ(io.sent.size(), 2u);
  EXPECT_EQ(ctl.state().last_report_seq, 3u);
}

// ---------------------------------------------------------------------------
// avoid

TEST(Avoid, RotatesClockwiseFirstThenAdvances) {
  // [P] disc dead ahead at 0.45 m; one 45-degree right turn clears it.
  WorldModel w = empty_world();
  w.obstacles.push_back({"d", Disc{{0.55, 0.0}, 0.1}});
  ControlConfig cfg;
  cfg.avoid_angle = deg2rad(45.0);
  MiniSim sim(w, cfg);
  Recorder rec;
  Controller ctl(sim, cfg, &rec);
  EXPECT_EQ(ctl.avoid(), MoveOutcome::Completed);
  // First motion is a clockwise rotation.
  ASSERT_FALSE(sim.sent.empty());
  EXPECT_DOUBLE_EQ(sim.sent.front().linear, 0.0);
  EXPECT_LT(sim.sent.front().angular, 0.0);
  // One pass: rotate 45 degrees right, then one clear forward interval.
  EXPECT_EQ(ctl.state().avoid_depth, 1);
  EXPECT_NEAR(sim.pose().heading, -kPi / 4.0, 0.021);
  EXPECT_NEAR(norm(sim.pose().position), 0.6, 0.02);
  EXPECT_LT(sim.pose().position.y, 0.0);
  EXPECT_FALSE(sim.collided);
  EXPECT_GT(sim.min_clearance, 0.0);
  EXPECT_EQ(rec.count(EventKind::AvoidStart), 1);
  EXPECT_EQ(rec.count(EventKind::AvoidEnd), 1);
  EXPECT_EQ(rec.count(EventKind::ObstacleDetected), 0);
}

TEST(Avoid, KeepsSteppingWhileBlocked) {
  // [P] a tall slab forces three 30-degree steps: -30 still blocked by the
  // pre-check, -60 clears the check but trips mid-advance, -90 runs clear.
  WorldModel w = empty_world();
  w.obstacles.push_back({"slab", Rect{{0.3, -1.0}, {0.7, 1.0}}});
  MiniSim sim(w, ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.avoid(), MoveOutcome::Completed);
  EXPECT_EQ(ctl.state().avoid_depth, 3);
  EXPECT_NEAR(sim.pose().heading, -kPi / 2.0, 0.025);
  EXPECT_EQ(rec.count(EventKind::AvoidStart), 1);
  EXPECT_EQ(rec.count(EventKind::AvoidEnd), 1);
  EXPECT_EQ(rec.count(EventKind::ObstacleDetected), 1);  // the -60 advance
  EXPECT_FALSE(sim.collided);
}

TEST(Avoid, ExhaustsIterationsWhenFullyEnclosed) {
  // A tight ring of discs blocks every heading: the scan must stop at the
  // iteration bound with Unreachable instead of spinning forever.
  WorldModel w = empty_world();
  for (int i = 0; i < 12; ++i) {
    const double a = i * kPi / 6.0;
    w.obstacles.push_back(
        {"ring" + std::to_string(i), Disc{{0.6 * std::cos(a), 0.6 * std::sin(a)}, 0.25}});
  }
  MiniSim sim(w, ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.avoid(), MoveOutcome::Unreachable);
  EXPECT_EQ(ctl.state().avoid_depth, 64);  // [P] max_avoid_iterations
  EXPECT_EQ(rec.count(EventKind::AvoidStart), 1);
  EXPECT_EQ(rec.count(EventKind::AvoidEnd), 0);
  // Rotation-only: the platform never advanced into the ring.
  EXPECT_TRUE(all_rotation_only(sim.sent));
  EXPECT_FALSE(sim.collided);
}

// ---------------------------------------------------------------------------
// send_to

TEST(SendTo, StraightLineArrives) {
  MiniSim sim(empty_world(), ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.send_to({2.0, 0.0}), SendOutcome::Arrived);
  EXPECT_EQ(ctl.state().mode, Mode::Arrived);
  EXPECT_LE(distance(sim.pose().position, {2.0, 0.0}), 0.1);
  EXPECT_EQ(ctl.state().recursion_depth, 0);
  ASSERT_FALSE(sim.sent.empty());
  EXPECT_DOUBLE_EQ(sim.sent.back().linear, 0.0);  // halted on arrival
  EXPECT_EQ(rec.count(EventKind::Arrived), 1);
  EXPECT_FALSE(sim.collided);
}

TEST(SendTo, DegenerateTargetIssuesZeroCommands) {
  MiniSim sim(empty_world(), ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.send_to({0.05, 0.0}), SendOutcome::Arrived);
  EXPECT_TRUE(sim.sent.empty());
  EXPECT_EQ(ctl.state().mode, Mode::Arrived);
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_EQ(rec.events[0].first, EventKind::Arrived);
  EXPECT_EQ(rec.events[0].second, "degenerate target");
}

TEST(SendTo, TargetOutsideArenaRejected) {
  MiniSim sim(empty_world(), ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  ctl.set_arena_bounds({{-5.0, -5.0}, {5.0, 5.0}});
  EXPECT_EQ(ctl.send_to({6.0, 0.0}), SendOutcome::Unreachable);
  EXPECT_TRUE(sim.sent.empty());
  EXPECT_EQ(ctl.state().mode, Mode::Failed);
  EXPECT_EQ(ctl.state().failure_reason, "target outside arena bounds");
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_EQ(rec.events[0].first, EventKind::Failed);
  // In-bounds targets on the same controller still work after the rejection.
  EXPECT_EQ(ctl.send_to({1.0, 0.0}), SendOutcome::Arrived);
}

TEST(SendTo, NonFiniteTargetThrows) {
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  EXPECT_THROW(ctl.send_to({std::nan(""), 0.0}), std::invalid_argument);
  EXPECT_THROW(ctl.send_to({0.0, std::numeric_limits<double>::infinity()}),
               std::invalid_argument);
}

TEST(SendTo, AvoidsObstacleAndArrives) {
  // [P] the full reactive cycle: detect, scan right, clear, re-aim, arrive.
  WorldModel w = empty_world();
  w.obstacles.push_back({"d", Disc{{1.5, 0.0}, 0.15}});
  ControlConfig cfg;
  cfg.avoid_angle = deg2rad(60.0);
  MiniSim sim(w, cfg);
  Recorder rec;
  Controller ctl(sim, cfg, &rec);
  EXPECT_EQ(ctl.send_to({3.5, 0.0}), SendOutcome::Arrived);
  EXPECT_LE(distance(sim.pose().position, {3.5, 0.0}), 0.1);
  EXPECT_GE(ctl.state().recursion_depth, 1);
  EXPECT_TRUE(rec.has_subsequence({EventKind::ObstacleDetected, EventKind::AvoidStart,
                                   EventKind::AvoidEnd, EventKind::Arrived}));
  EXPECT_FALSE(sim.collided);
  EXPECT_GT(sim.min_clearance, 0.0);
}

TEST(SendTo, ForwardBudgetBoundsTotalTravel) {
  // [P] with one recursion and one avoid iteration the budget is
  // 1 * (1 + 1) = 2 forward intervals; a 10 m goal cannot fit and the run
  // must fail instead of looping.
  ControlConfig cfg;
  cfg.max_send_to_recursions = 1;
  cfg.max_avoid_iterations = 1;
  MiniSim sim(empty_world(), cfg);
  Controller ctl(sim, cfg);
  EXPECT_EQ(ctl.send_to({10.0, 0.0}), SendOutcome::Unreachable);
  EXPECT_EQ(ctl.state().mode, Mode::Failed);
  EXPECT_EQ(ctl.state().failure_reason, "forward budget exhausted");
  // Exactly two full intervals of travel happened before the cutoff.
  EXPECT_NEAR(sim.pose().position.x, 1.2, 0.02);
}

TEST(SendTo, RecursionBoundExhaustsOnRepeatedBlocking) {
  // The target sits inside a large disc: every re-approach is blocked again
  // until the recursion bound trips.
  WorldModel w = empty_world();
  w.obstacles.push_back({"big", Disc{{1.2, 0.0}, 0.55}});
  ControlConfig cfg;
  cfg.max_send_to_recursions = 2;
  MiniSim sim(w, cfg);
  Controller ctl(sim, cfg);
  EXPECT_EQ(ctl.send_to({1.2, 0.0}), SendOutcome::Unreachable);
  EXPECT_EQ(ctl.state().mode, Mode::Failed);
  EXPECT_EQ(ctl.state().failure_reason, "send_to recursion bound exhausted");
  EXPECT_EQ(ctl.state().recursion_depth, 2);
}

TEST(SendTo, ModeTransitionsAreDedupedAndOrdered) {
  MiniSim sim(empty_world(), ControlConfig{});
  Recorder rec;
  Controller ctl(sim, ControlConfig{}, &rec);
  EXPECT_EQ(ctl.send_to({1.0, 0.0}), SendOutcome::Arrived);
  ASSERT_FALSE(rec.modes.empty());
  for (std::size_t i = 1; i < rec.modes.size(); ++i) {
    EXPECT_NE(rec.modes[i], rec.modes[i - 1]);  // observer sees transitions only
  }
  EXPECT_EQ(rec.modes.back(), Mode::Arrived);
  EXPECT_NE(std::find(rec.modes.begin(), rec.modes.end(), Mode::MovingForward),
            rec.modes.end());
}

TEST(SendTo, TelemetryLossPropagates) {
  ScriptedIo io;
  io.lose_telemetry = true;
  Controller ctl(io, ControlConfig{});
  EXPECT_THROW(ctl.send_to({1.0, 0.0}), TelemetryLostError);
  EXPECT_THROW(ctl.rotate(0.5), TelemetryLostError);
}

// ---------------------------------------------------------------------------
// detection report handling

TEST(Reports, StaleSequenceDroppedEqualAccepted) {
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  DetectionReport fresh{100, 0, {make_det(DetectionKind::Obstacle, Zone::Front, 0.4, true, "a")}};
  ctl.on_detection_report(fresh);
  EXPECT_EQ(ctl.state().last_report_seq, 100u);
  EXPECT_TRUE(ctl.state().front_blocked);

  // Older sequence: ignored entirely, counter ticks up.
  DetectionReport stale{99, 0, {}};
  ctl.on_detection_report(stale);
  EXPECT_EQ(ctl.state().last_report_seq, 100u);
  EXPECT_EQ(ctl.state().stale_reports_dropped, 1u);
  EXPECT_TRUE(ctl.state().front_blocked);  // stale data never clears the arm

  // Equal sequence: accepted (idempotent redelivery), clears the arm.
  DetectionReport same{100, 0, {}};
  ctl.on_detection_report(same);
  EXPECT_EQ(ctl.state().stale_reports_dropped, 1u);
  EXPECT_FALSE(ctl.state().front_blocked);
}

TEST(Reports, FirstReportAlwaysAccepted) {
  // Sequence numbers can start anywhere, including zero.
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  ctl.on_detection_report({0, 0, {}});
  EXPECT_EQ(ctl.state().last_report_seq, 0u);
  EXPECT_EQ(ctl.state().stale_reports_dropped, 0u);
}

TEST(Stop, SendsSingleHaltWithoutModeChange) {
  ScriptedIo io;
  Controller ctl(io, ControlConfig{});
  ctl.stop();
  ASSERT_EQ(io.sent.size(), 1u);
  EXPECT_DOUBLE_EQ(io.sent[0].linear, 0.0);
  EXPECT_DOUBLE_EQ(io.sent[0].angular, 0.0);
  EXPECT_EQ(ctl.state().mode, Mode::Idle);
}

}  // namespace
