#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "losnav/controller.hpp"
#include "losnav/geometry.hpp"
#include "losnav/perception.hpp"
#include "losnav/protocol.hpp"
#include "losnav/world.hpp"

namespace losnav {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double vision_period = 0.2;     // seconds between detection reports
  double report_drop_rate = 0.0;  // seeded fraction of reports discarded
};

struct ScenarioConfigs {
  ControlConfig control;
  ZoneConfig zones;
  CameraConfig camera;
  ProximityConfig proximity;
  SensorConfig sensor;
  SimConfig sim;
};

struct Scenario {
  WorldModel world;
  std::vector<Vec2> targets;
  ScenarioConfigs configs;
  std::uint64_t seed = 1;
  std::string label;
};

inline long vision_period_ticks(const ScenarioConfigs& cfgs) {
  return std::lround(cfgs.sim.vision_period / cfgs.control.tick_dt);
}

inline void validate_scenario(const Scenario& scn) {
  auto reject = [](const std::string& why) { throw ScenarioError("scenario invalid: " + why); };
  try {
    scn.configs.control.validate();
  } catch (const std::invalid_argument& e) {
    reject(e.what());
  }
  const auto& c = scn.configs;
  if (!(c.zones.side_margin > 0.0 && c.zones.side_margin < 0.5)) {
    reject("zones.side_margin must lie in (0, 0.5)");
  }
  if (!(c.zones.height_fraction > 0.0 && c.zones.height_fraction < 1.0)) {
    reject("zones.height_fraction must lie in (0, 1)");
  }
  if (!(c.camera.horizontal_fov > 0.0 && c.camera.horizontal_fov < 2.0 * kPi)) {
    reject("camera.horizontal_fov must lie in (0, 2*pi)");
  }
  if (!(c.camera.vertical_fov > 0.0 && c.camera.vertical_fov <= kPi)) {
    reject("camera.vertical_fov must lie in (0, pi]");
  }
  if (!(c.camera.mount_height > 0.0)) reject("camera.mount_height must be positive");
  if (!(c.proximity.obstacle_threshold > 0.0 && c.proximity.device_serve_distance > 0.0)) {
    reject("proximity thresholds must be positive");
  }
  if (!(c.proximity.device_serve_distance >= c.control.arrival_tolerance)) {
    reject("proximity.device_serve_distance must be >= controller.arrival_tolerance");
  }
  if (!(c.sensor.delta_left > 0.0 && c.sensor.delta_left < kPi) ||
      !(c.sensor.delta_right > 0.0 && c.sensor.delta_right < kPi)) {
    reject("sensor ray offsets must lie in (0, pi)");
  }
  if (!(c.sensor.max_range > 0.0)) reject("sensor.max_range must be positive");
  if (!(c.sensor.noise >= 0.0)) reject("sensor.noise must be non-negative");
  if (!(c.sim.report_drop_rate >= 0.0 && c.sim.report_drop_rate <= 1.0)) {
    reject("sim.report_drop_rate must lie in [0, 1]");
  }
  const long period = vision_period_ticks(c);
  if (period < 1 || std::abs(period * c.control.tick_dt - c.sim.vision_period) > 1e-9) {
    reject("sim.vision_period must be a positive multiple of controller.tick_dt");
  }
  if (!(c.control.default_speed <= scn.world.limits.v_max)) {
    reject("controller.default_speed exceeds world.v_max");
  }
  if (!(c.control.rotation_speed <= scn.world.limits.omega_max)) {
    reject("controller.rotation_speed exceeds world.omega_max");
  }
  const Rect& b = scn.world.bounds;
  if (!(b.min.x < b.max.x && b.min.y < b.max.y)) reject("bounds must have positive extent");
  if (!(scn.world.mrp_radius > 0.0)) reject("mrp radius must be positive");
  for (const auto& ob : scn.world.obstacles) {
    if (const auto* d = std::get_if<Disc>(&ob.shape)) {
      if (!(d->radius > 0.0)) reject("disc radius must be positive (" + ob.id + ")");
    } else {
      const auto& r = std::get<Rect>(ob.shape);
      if (!(r.min.x < r.max.x && r.min.y < r.max.y)) {
        reject("rect must have positive extent (" + ob.id + ")");
      }
    }
  }
  auto inside = [&](const Vec2& p) {
    return p.x >= b.min.x && p.x <= b.max.x && p.y >= b.min.y && p.y <= b.max.y;
  };
  if (!inside(scn.world.mrp.position)) reject("mrp start outside bounds");
  for (const auto& t : scn.targets) {
    if (!is_finite(t) || !inside(t)) reject("target outside bounds");
  }
  for (const auto& d : scn.world.devices) {
    if (!inside(d.position)) reject("device outside bounds (" + d.id + ")");
  }
  if (check_collision(scn.world)) reject("mrp starts in collision");
}

namespace scn_detail {

inline double parse_double(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ScenarioError(where + ": expected a number, got '" + tok + "'");
  }
  if (used != tok.size() || !std::isfinite(v)) {
    throw ScenarioError(where + ": expected a finite number, got '" + tok + "'");
  }
  return v;
}

// Dotted-key configuration setter backing the `set` directive.
inline void apply_config(Scenario& scn, const std::string& key, const std::string& value,
                         const std::string& where) {
  auto num = [&] { return parse_double(value, where); };
  auto count = [&] {
    const double v = parse_double(value, where);
    if (v != std::floor(v) || v < 1.0 || v > 1e9) {
      throw ScenarioError(where + ": expected a positive integer, got '" + value + "'");
    }
    return static_cast<int>(v);
  };
  auto flag = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ScenarioError(where + ": expected true/false, got '" + value + "'");
  };
  auto& c = scn.configs;
  if (key == "controller.default_speed") c.control.default_speed = num();
  else if (key == "controller.forward_interval") c.control.forward_interval = num();
  else if (key == "controller.avoid_angle") c.control.avoid_angle = num();
  else if (key == "controller.rotation_speed") c.control.rotation_speed = num();
  else if (key == "controller.arrival_tolerance") c.control.arrival_tolerance = num();
  else if (key == "controller.heading_tolerance") c.control.heading_tolerance = num();
  else if (key == "controller.max_avoid_iterations") c.control.max_avoid_iterations = count();
  else if (key == "controller.max_send_to_recursions") c.control.max_send_to_recursions = count();
  else if (key == "controller.front_stop_distance") c.control.front_stop_distance = num();
  else if (key == "controller.tick_dt") c.control.tick_dt = num();
  else if (key == "zones.side_margin") c.zones.side_margin = num();
  else if (key == "zones.height_fraction") c.zones.height_fraction = num();
  else if (key == "camera.horizontal_fov") c.camera.horizontal_fov = num();
  else if (key == "camera.vertical_fov") c.camera.vertical_fov = num();
  else if (key == "camera.mount_height") c.camera.mount_height = num();
  else if (key == "proximity.obstacle_threshold") c.proximity.obstacle_threshold = num();
  else if (key == "proximity.device_serve_distance") c.proximity.device_serve_distance = num();
  else if (key == "sensor.delta_left") c.sensor.delta_left = num();
  else if (key == "sensor.delta_right") c.sensor.delta_right = num();
  else if (key == "sensor.max_range") c.sensor.max_range = num();
  else if (key == "sensor.noise") c.sensor.noise = num();
  else if (key == "sim.vision_period") c.sim.vision_period = num();
  else if (key == "sim.report_drop_rate") c.sim.report_drop_rate = num();
  else if (key == "world.v_max") scn.world.limits.v_max = num();
  else if (key == "world.omega_max") scn.world.limits.omega_max = num();
  else if (key == "world.walls_solid") scn.world.walls_solid = flag();
  else throw ScenarioError(where + ": unknown config key '" + key + "'");
}

}  // namespace scn_detail

// Line-oriented scenario text: bounds / mrp / disc / rect / device / target /
// set / seed directives, # comments. Throws ScenarioError with the offending
// line number on any problem.
inline Scenario parse_scenario(std::istream& in, const std::string& name) {
  Scenario scn;
  scn.label = name;
  std::string line;
  int line_no = 0;
  int obstacle_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string dir;
    if (!(ls >> dir)) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    auto next = [&](const char* field) {
      std::string tok;
      if (!(ls >> tok)) throw ScenarioError(where + ": missing field '" + field + "'");
      return tok;
    };
    auto num = [&](const char* field) {
      return scn_detail::parse_double(next(field), where);
    };
    auto expect_end = [&] {
      std::string extra;
      if (ls >> extra) throw ScenarioError(where + ": unexpected trailing token '" + extra + "'");
    };
    if (dir == "bounds") {
      const double x0 = num("x0"), y0 = num("y0"), x1 = num("x1"), y1 = num("y1");
      expect_end();
      if (!(x0 < x1 && y0 < y1)) throw ScenarioError(where + ": bounds must satisfy x0<x1, y0<y1");
      scn.world.bounds = {{x0, y0}, {x1, y1}};
    } else if (dir == "mrp") {
      const double x = num("x"), y = num("y"), theta = num("theta"), radius = num("radius");
      expect_end();
      if (!(radius > 0.0)) throw ScenarioError(where + ": mrp radius must be positive");
      if (!(theta > -kPi && theta <= kPi)) {
        throw ScenarioError(where + ": mrp theta must lie in (-pi, pi]");
      }
      scn.world.mrp = {{x, y}, theta};
      scn.world.mrp_radius = radius;
    } else if (dir == "disc") {
      const double x = num("x"), y = num("y"), r = num("r");
      expect_end();
      if (!(r > 0.0)) throw ScenarioError(where + ": disc radius must be positive");
      scn.world.obstacles.push_back({"disc_" + std::to_string(++obstacle_no), Disc{{x, y}, r}});
    } else if (dir == "rect") {
      const double x0 = num("x0"), y0 = num("y0"), x1 = num("x1"), y1 = num("y1");
      expect_end();
      if (!(x0 < x1 && y0 < y1)) throw ScenarioError(where + ": rect must satisfy x0<x1, y0<y1");
      scn.world.obstacles.push_back(
          {"rect_" + std::to_string(++obstacle_no), Rect{{x0, y0}, {x1, y1}}});
    } else if (dir == "device") {
      const std::string id = next("id");
      const double x = num("x"), y = num("y");
      expect_end();
      scn.world.devices.push_back({id, {x, y}});
    } else if (dir == "target") {
      const double x = num("x"), y = num("y");
      expect_end();
      scn.targets.push_back({x, y});
    } else if (dir == "set") {
      const std::string key = next("key");
      const std::string value = next("value");
      expect_end();
      scn_detail::apply_config(scn, key, value, where);
    } else if (dir == "seed") {
      const double v = scn_detail::parse_double(next("n"), where);
      expect_end();
      if (v != std::floor(v) || v < 0.0 || v > 1e18) {
        throw ScenarioError(where + ": seed must be a non-negative integer");
      }
      scn.seed = static_cast<std::uint64_t>(v);
    } else {
      throw ScenarioError(where + ": unknown directive '" + dir + "'");
    }
  }
  validate_scenario(scn);
  return scn;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  return parse_scenario(in, path);
}

// ---------------------------------------------------------------------------
// World engine: the ground-truth side of the robot boundary, shared verbatim
// by the in-process simulation and the split-process robot role so both
// integrate identical wire-quantized commands into identical telemetry.

class WorldEngine {
 public:
  WorldEngine(WorldModel world, SensorConfig sensor, double tick_dt, std::uint64_t seed)
      : world_(std::move(world)),
        sensor_(sensor),
        dt_(tick_dt),
        rng_(static_cast<std::mt19937::result_type>(seed)) {
    refresh_telemetry();
  }

  // Applies one command tick (quantizing through the wire domain first) and
  // reports whether the resulting pose is collision-free.
  bool apply(const VelocityCommand& cmd) {
    const VelocityCommand q = canonical_value(cmd);
    ++tick_;
    world_.mrp = step_kinematics(world_.mrp, q, dt_, world_.limits);
    last_cmd_ = q;
    refresh_telemetry();
    if (check_collision(world_)) {
      collided_ = true;
      return false;
    }
    return true;
  }

  const Telemetry& telemetry() const { return telemetry_; }
  const WorldModel& world() const { return world_; }
  double now() const { return static_cast<double>(tick_) * dt_; }
  std::uint64_t tick() const { return tick_; }
  double tick_dt() const { return dt_; }
  bool collided() const { return collided_; }

  // Identifies what the body overlaps after a failed apply.
  std::string collision_subject() const {
    for (const auto& ob : world_.obstacles) {
      if (detail::surface_distance(world_.mrp.position, ob) < world_.mrp_radius) return ob.id;
    }
    return "wall";
  }

 private:
  void refresh_telemetry() {
    const UltrasonicReading us =
        ultrasonic_read(world_, sensor_, sensor_.noise > 0.0 ? &rng_ : nullptr);
    Telemetry t;
    t.seq = tick_;
    t.timestamp_ms = static_cast<std::uint64_t>(std::llround(now() * 1000.0));
    t.pose = world_.mrp;
    t.velocity = last_cmd_;
    t.imu = {world_.mrp.heading, 0.0, 0.0};
    t.ultrasonic = us;
    telemetry_ = canonical_value(t);
  }

  WorldModel world_;
  SensorConfig sensor_;
  double dt_;
  std::mt19937 rng_;
  std::uint64_t tick_ = 0;
  VelocityCommand last_cmd_{};
  Telemetry telemetry_{};
  bool collided_ = false;
};

// Synthesizes the vision frame for one telemetry sample: the static world
// with the pose taken from the (wire-quantized) telemetry. Emits a report
// once per vision period; identical inputs give byte-identical reports.
inline std::optional<DetectionReport> vision_frame(const Telemetry& t,
                                                   const WorldModel& static_world,
                                                   const ScenarioConfigs& cfgs) {
  const long period = vision_period_ticks(cfgs);
  if (t.seq % static_cast<std::uint64_t>(period) != 0) return std::nullopt;
  WorldModel w = static_world;
  w.mrp = t.pose;
  const std::uint64_t seq = t.seq / static_cast<std::uint64_t>(period) + 1;
  return build_report(w, cfgs.camera, cfgs.zones, cfgs.proximity, seq, t.timestamp_ms);
}

// ---------------------------------------------------------------------------
// Trajectory logging.

struct LogRow {
  double t = 0.0;
  Pose2D pose;
  VelocityCommand velocity;
  UltrasonicReading ultrasonic;
  Mode mode = Mode::Idle;
  bool front_blocked = false;
  bool los = false;
};

struct LogEvent {
  double t = 0.0;
  EventKind kind = EventKind::ObstacleDetected;
  std::string detail;
};

struct TrajectoryLog {
  std::vector<LogRow> rows;
  std::vector<LogEvent> events;
  std::vector<Mode> mode_transitions;
};

// Raised by the simulated robot boundary when a command drives the body into
// an obstacle or wall; unwinds the controller and halts the run.
class CollisionHaltError : public std::runtime_error {
 public:
  explicit CollisionHaltError(const std::string& subject)
      : std::runtime_error("collision with " + subject), subject_(subject) {}
  const std::string& subject() const { return subject_; }

 private:
  std::string subject_;
};

// In-process RobotInterface: lockstep virtual time, one tick per command,
// vision cadence with an optional seeded drop knob, full per-tick logging.
// real_time sleeps one tick_dt per command for interactive viewing; the
// arithmetic is identical either way.
class SimIo final : public RobotInterface {
 public:
  SimIo(const Scenario& scn, TrajectoryLog& log, bool real_time = false)
      : engine_(scn.world, scn.configs.sensor, scn.configs.control.tick_dt, scn.seed),
        static_world_(scn.world),
        cfgs_(scn.configs),
        log_(log),
        drop_rng_(static_cast<std::mt19937::result_type>(scn.seed ^ 0x9e3779b97f4a7c15ULL)),
        real_time_(real_time) {
    deliver_vision();
  }

  void attach_controller(const Controller* ctrl) { ctrl_ = ctrl; }

  void send_command(const VelocityCommand& cmd) override {
    const bool ok = engine_.apply(cmd);
    if (real_time_) {
      std::this_thread::sleep_for(std::chrono::duration<double>(engine_.tick_dt()));
    }
    if (!ok) {
      const std::string subject = engine_.collision_subject();
      log_.events.push_back({engine_.now(), EventKind::Failed, "collision with " + subject});
      log_row();
      throw CollisionHaltError(subject);
    }
    deliver_vision();
    log_row();
  }

  Telemetry latest_telemetry() override { return engine_.telemetry(); }

  std::optional<DetectionReport> poll_report() override {
    return std::exchange(pending_report_, std::nullopt);
  }

  double now() const { return engine_.now(); }
  const WorldModel& world() const { return engine_.world(); }
  std::uint64_t reports_emitted() const { return reports_emitted_; }
  std::uint64_t reports_dropped() const { return reports_dropped_; }

  void log_row() {
    LogRow row;
    row.t = engine_.now();
    const Telemetry& t = engine_.telemetry();
    row.pose = t.pose;
    row.velocity = t.velocity;
    row.ultrasonic = t.ultrasonic;
    if (ctrl_ != nullptr) {
      const ControllerState st = ctrl_->state();
      row.mode = st.mode;
      row.front_blocked = st.front_blocked;
    }
    row.los = los_now();
    log_.rows.push_back(row);
  }

 private:
  bool los_now() const {
    const WorldModel& w = engine_.world();
    if (w.devices.empty()) return false;
    return line_of_sight(w.mrp.position, w.devices.front().position, w);
  }

  void deliver_vision() {
    auto report = vision_frame(engine_.telemetry(), static_world_, cfgs_);
    if (!report) return;
    ++reports_emitted_;
    if (cfgs_.sim.report_drop_rate > 0.0) {
      const double u = static_cast<double>(drop_rng_()) / 4294967296.0;
      if (u < cfgs_.sim.report_drop_rate) {
        ++reports_dropped_;
        return;
      }
    }
    pending_report_ = std::move(*report);
  }

  WorldEngine engine_;
  WorldModel static_world_;
  ScenarioConfigs cfgs_;
  TrajectoryLog& log_;
  std::mt19937 drop_rng_;
  bool real_time_ = false;
  const Controller* ctrl_ = nullptr;
  std::optional<DetectionReport> pending_report_;
  std::uint64_t reports_emitted_ = 0;
  std::uint64_t reports_dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Run driver and summary.

struct RunSummary {
  std::vector<SendOutcome> outcomes;  // one per attempted target
  bool all_arrived = false;
  bool collided = false;
  std::string collision_subject;
  double final_error = 0.0;    // distance to the last attempted target
  double path_length = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  double duration = 0.0;       // simulated seconds
  bool los_final = false;      // line of sight to the active device at the end
  double device_distance_final = std::numeric_limits<double>::infinity();
  std::uint64_t reports_emitted = 0;
  std::uint64_t reports_dropped = 0;
  std::uint64_t stale_reports_dropped = 0;
};

struct RunResult {
  TrajectoryLog log;
  RunSummary summary;
};

// Distance from the body circle to the nearest obstacle surface or solid
// wall; negative means overlap.
inline double body_clearance(const Vec2& p, double radius, const WorldModel& world) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ob : world.obstacles) {
    best = std::min(best, detail::surface_distance(p, ob));
  }
  if (world.walls_solid) {
    const Rect& b = world.bounds;
    best = std::min({best, p.x - b.min.x, b.max.x - p.x, p.y - b.min.y, b.max.y - p.y});
  }
  return best - radius;
}

inline RunResult run(const Scenario& scn, bool real_time = false) {
  validate_scenario(scn);
  RunResult result;
  SimIo io(scn, result.log, real_time);

  struct SimObserver final : ControlObserver {
    SimIo* io = nullptr;
    TrajectoryLog* log = nullptr;
    void on_mode(Mode m) override { log->mode_transitions.push_back(m); }
    void on_event(EventKind k, const std::string& detail) override {
      log->events.push_back({io->now(), k, detail});
    }
  } observer;
  observer.io = &io;
  observer.log = &result.log;

  Controller ctrl(io, scn.configs.control, &observer);
  ctrl.set_arena_bounds(scn.world.bounds);
  io.attach_controller(&ctrl);
  io.log_row();  // initial state at t = 0

  RunSummary& s = result.summary;
  Vec2 last_target = scn.world.mrp.position;
  try {
    for (const auto& target : scn.targets) {
      last_target = target;
      const SendOutcome out = ctrl.send_to(target);
      s.outcomes.push_back(out);
      if (out != SendOutcome::Arrived) break;
    }
  } catch (const CollisionHaltError& e) {
    s.collided = true;
    s.collision_subject = e.subject();
  }
  s.all_arrived = !s.collided && s.outcomes.size() == scn.targets.size();
  for (const auto out : s.outcomes) {
    if (out != SendOutcome::Arrived) s.all_arrived = false;
  }
  const ControllerState final_state = ctrl.state();
  s.stale_reports_dropped = final_state.stale_reports_dropped;
  s.reports_emitted = io.reports_emitted();
  s.reports_dropped = io.reports_dropped();

  const auto& rows = result.log.rows;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    s.path_length += distance(rows[i].pose.position, rows[i + 1].pose.position);
  }
  for (const auto& row : rows) {
    s.min_clearance =
        std::min(s.min_clearance, body_clearance(row.pose.position, scn.world.mrp_radius,
                                                 scn.world));
  }
  if (!rows.empty()) {
    const auto& last = rows.back();
    s.duration = last.t;
    s.final_error = scn.targets.empty() ? 0.0 : distance(last.pose.position, last_target);
    s.los_final = last.los;
    if (!scn.world.devices.empty()) {
      s.device_distance_final =
          distance(last.pose.position, scn.world.devices.front().position);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Log serialization: canonical numbers throughout so identical runs yield
// byte-identical files.

namespace log_detail {

inline void append_num(std::string& out, double v) { wire_detail::append_number(out, v); }

}  // namespace log_detail

inline std::string trajectory_csv(const TrajectoryLog& log) {
  std::string out = "t,x,y,theta,v,omega,us_left,us_front,us_right,mode,front_blocked,los\n";
  for (const auto& r : log.rows) {
    log_detail::append_num(out, r.t);
    out += ',';
    log_detail::append_num(out, r.pose.position.x);
    out += ',';
    log_detail::append_num(out, r.pose.position.y);
    out += ',';
    log_detail::append_num(out, r.pose.heading);
    out += ',';
    log_detail::append_num(out, r.velocity.linear);
    out += ',';
    log_detail::append_num(out, r.velocity.angular);
    out += ',';
    log_detail::append_num(out, r.ultrasonic.left);
    out += ',';
    log_detail::append_num(out, r.ultrasonic.front);
    out += ',';
    log_detail::append_num(out, r.ultrasonic.right);
    out += ',';
    out += mode_name(r.mode);
    out += ',';
    out += r.front_blocked ? '1' : '0';
    out += ',';
    out += r.los ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::string events_csv(const TrajectoryLog& log) {
  std::string out = "t,kind,detail\n";
  for (const auto& e : log.events) {
    log_detail::append_num(out, e.t);
    out += ',';
    out += event_kind_name(e.kind);
    out += ',';
    out += e.detail;
    out += '\n';
  }
  return out;
}

// Deterministic top-down SVG: arena, obstacles, devices, targets, trajectory
// polyline and event markers.
inline std::string render_plot(const TrajectoryLog& log, const Scenario& scn) {
  if (log.rows.empty()) throw std::invalid_argument("render_plot: log has no rows");
  const Rect& b = scn.world.bounds;
  const double span_x = b.max.x - b.min.x;
  const double span_y = b.max.y - b.min.y;
  const double pad = 0.05 * std::max(span_x, span_y);
  const double scale = 720.0 / std::max(span_x + 2 * pad, span_y + 2 * pad);
  const double width = (span_x + 2 * pad) * scale;
  const double height = (span_y + 2 * pad) * scale;
  auto sx = [&](double x) { return (x - b.min.x + pad) * scale; };
  auto sy = [&](double y) { return height - (y - b.min.y + pad) * scale; };
  std::string out;
  auto num = [&](double v) { log_detail::append_num(out, v); };

  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  num(width);
  out += "\" height=\"";
  num(height);
  out += "\" viewBox=\"0 0 ";
  num(width);
  out += ' ';
  num(height);
  out += "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n<rect x=\"";
  num(sx(b.min.x));
  out += "\" y=\"";
  num(sy(b.max.y));
  out += "\" width=\"";
  num(span_x * scale);
  out += "\" height=\"";
  num(span_y * scale);
  out += "\" fill=\"#f7f7f7\" stroke=\"#333333\"/>\n";
  for (const auto& ob : scn.world.obstacles) {
    if (const auto* d = std::get_if<Disc>(&ob.shape)) {
      out += "<circle cx=\"";
      num(sx(d->center.x));
      out += "\" cy=\"";
      num(sy(d->center.y));
      out += "\" r=\"";
      num(d->radius * scale);
      out += "\" fill=\"#b55050\"/>\n";
    } else {
      const auto& r = std::get<Rect>(ob.shape);
      out += "<rect x=\"";
      num(sx(r.min.x));
      out += "\" y=\"";
      num(sy(r.max.y));
      out += "\" width=\"";
      num((r.max.x - r.min.x) * scale);
      out += "\" height=\"";
      num((r.max.y - r.min.y) * scale);
      out += "\" fill=\"#b55050\"/>\n";
    }
  }
  for (const auto& dev : scn.world.devices) {
    out += "<circle cx=\"";
    num(sx(dev.position.x));
    out += "\" cy=\"";
    num(sy(dev.position.y));
    out += "\" r=\"6\" fill=\"#2e8b57\"/>\n";
  }
  for (const auto& t : scn.targets) {
    out += "<circle cx=\"";
    num(sx(t.x));
    out += "\" cy=\"";
    num(sy(t.y));
    out += "\" r=\"5\" fill=\"none\" stroke=\"#1f63c4\" stroke-width=\"2\"/>\n";
  }
  if (log.rows.size() == 1) {
    out += "<circle cx=\"";
    num(sx(log.rows[0].pose.position.x));
    out += "\" cy=\"";
    num(sy(log.rows[0].pose.position.y));
    out += "\" r=\"4\" fill=\"#1f1f1f\"/>\n";
  } else {
    out += "<polyline fill=\"none\" stroke=\"#1f1f1f\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
      if (i) out += ' ';
      num(sx(log.rows[i].pose.position.x));
      out += ',';
      num(sy(log.rows[i].pose.position.y));
    }
    out += "\"/>\n";
  }
  auto row_at = [&](double t) -> const LogRow& {
    std::size_t lo = 0;
    for (std::size_t i = 0; i < log.rows.size() && log.rows[i].t <= t; ++i) lo = i;
    return log.rows[lo];
  };
  for (const auto& e : log.events) {
    const LogRow& r = row_at(e.t);
    const char* color = "#888888";
    switch (e.kind) {
      case EventKind::ObstacleDetected: color = "#e08a00"; break;
      case EventKind::AvoidStart: color = "#c0392b"; break;
      case EventKind::AvoidEnd: color = "#1f63c4"; break;
      case EventKind::Arrived: color = "#2e8b57"; break;
      case EventKind::Failed: color = "#000000"; break;
    }
    out += "<circle cx=\"";
    num(sx(r.pose.position.x));
    out += "\" cy=\"";
    num(sy(r.pose.position.y));
    out += "\" r=\"3\" fill=\"";
    out += color;
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace losnav
