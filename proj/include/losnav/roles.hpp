#pragma once

#include <chrono>
#include <csignal>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <string>

#include "losnav/controller.hpp"
#include "losnav/protocol.hpp"
#include "losnav/sim.hpp"
#include "losnav/udp.hpp"

namespace losnav {

namespace role_detail {

inline volatile std::sig_atomic_t g_interrupted = 0;

inline void sigint_handler(int) { g_interrupted = 1; }

inline double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace role_detail

inline void install_sigint_handler() { std::signal(SIGINT, role_detail::sigint_handler); }
inline bool interrupted() { return role_detail::g_interrupted != 0; }
inline void clear_interrupt() { role_detail::g_interrupted = 0; }

// ---------------------------------------------------------------------------
// Control-side UDP binding of RobotInterface. One datagram socket bound to
// the control address receives telemetry, detection reports and target
// requests; commands go to the robot address. send_command is lock-stepped:
// it resends until the acknowledging telemetry (and the vision report due at
// that tick, when vision is live) arrives, so the controller observes exactly
// the same sequence of inputs as the in-process simulation.
class UdpRobotIo final : public RobotInterface {
 public:
  UdpRobotIo(const NetConfig& net, const ScenarioConfigs& cfgs, double startup_deadline = 10.0)
      : cfgs_(cfgs),
        robot_dst_(parse_addr(net.robot_addr)),
        period_(vision_period_ticks(cfgs)),
        startup_deadline_(startup_deadline) {
    sock_.bind(net.control_addr);
  }

  // Waits for the first telemetry, then probes for a live vision stream.
  void start() {
    const double t0 = role_detail::steady_seconds();
    while (!have_telemetry_) {
      if (interrupted()) throw TelemetryLostError{};
      if (role_detail::steady_seconds() - t0 > startup_deadline_) throw TelemetryLostError{};
      pump(0.2);
    }
    const std::uint64_t due = report_seq_due(telemetry_.seq);
    const double t1 = role_detail::steady_seconds();
    while (due != 0 && !(pending_report_ && pending_report_->seq >= due)) {
      if (interrupted()) break;
      if (role_detail::steady_seconds() - t1 > vision_probe_seconds_) break;
      pump(0.2);
    }
    vision_active_ = pending_report_.has_value();
  }

  bool vision_active() const { return vision_active_; }
  std::uint64_t decode_failures() const { return decode_failures_; }
  std::uint64_t stale_dropped() const { return stale_dropped_; }

  void send_command(const VelocityCommand& cmd) override {
    const std::uint64_t expected = telemetry_.seq + 1;
    const std::uint64_t ms = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(expected) * cfgs_.control.tick_dt * 1000.0));
    const std::string bytes = encode(make_message(cmd, expected, ms));
    const double t0 = role_detail::steady_seconds();
    sock_.send_to(robot_dst_, bytes);
    double last_send = t0;
    while (telemetry_.seq < expected) {
      const double now = role_detail::steady_seconds();
      if (interrupted() || now - t0 > lockstep_deadline_) throw TelemetryLostError{};
      // Resend on a timer, not on receive silence: telemetry keepalives must
      // not starve the retransmission of a lost command datagram.
      if (now - last_send > resend_interval_) {
        sock_.send_to(robot_dst_, bytes);
        last_send = now;
      }
      pump(0.2);
    }
    const std::uint64_t due = report_seq_due(telemetry_.seq);
    if (vision_active_ && due != 0) {
      while (!(last_report_seq_seen_ >= due)) {
        if (interrupted() || role_detail::steady_seconds() - t0 > lockstep_deadline_) {
          throw TelemetryLostError{};
        }
        pump(0.2);
      }
    }
  }

  Telemetry latest_telemetry() override {
    if (!have_telemetry_) throw TelemetryLostError{};
    if (age() > staleness_bound_) {
      pump(0.3);
      if (age() > staleness_bound_) throw TelemetryLostError{};
    }
    return telemetry_;
  }

  std::optional<DetectionReport> poll_report() override {
    auto out = std::move(pending_report_);
    pending_report_.reset();
    return out;
  }

  std::optional<TargetRequest> pop_target() {
    if (targets_.empty()) return std::nullopt;
    const TargetRequest t = targets_.front();
    targets_.pop_front();
    return t;
  }

  // Receives at most one datagram, waiting up to `slice` seconds.
  bool pump(double slice) {
    sock_.set_receive_timeout(slice);
    const auto bytes = sock_.receive();
    if (!bytes) return false;
    handle(*bytes);
    return true;
  }

 private:
  double age() const { return role_detail::steady_seconds() - telemetry_received_at_; }

  // Seq of the report generated at telemetry tick `t`, or 0 when none is due.
  std::uint64_t report_seq_due(std::uint64_t t) const {
    const auto p = static_cast<std::uint64_t>(period_);
    return t % p == 0 ? t / p + 1 : 0;
  }

  void handle(const std::string& bytes) {
    const DecodeResult r = decode(bytes);
    if (r.status != DecodeStatus::Ok) {
      ++decode_failures_;
      return;
    }
    const WireMessage& msg = *r.message;
    switch (msg.type) {
      case MessageType::Telemetry: {
        const auto& t = std::get<Telemetry>(msg.payload);
        if (!have_telemetry_ || t.seq >= telemetry_.seq) {
          telemetry_ = t;
          have_telemetry_ = true;
          telemetry_received_at_ = role_detail::steady_seconds();
        }
        break;
      }
      case MessageType::DetectionReport: {
        const auto& rep = std::get<DetectionReport>(msg.payload);
        if (!seen_report_ || rep.seq >= last_report_seq_seen_) {
          last_report_seq_seen_ = rep.seq;
          seen_report_ = true;
          pending_report_ = rep;
        } else {
          ++stale_dropped_;
        }
        break;
      }
      case MessageType::TargetRequest:
        targets_.push_back(std::get<TargetRequest>(msg.payload));
        break;
      case MessageType::Command:
        break;  // not addressed to the control role
    }
  }

  UdpSocket sock_;
  ScenarioConfigs cfgs_;
  sockaddr_in robot_dst_;
  long period_;
  double startup_deadline_;
  double vision_probe_seconds_ = 1.5;
  double lockstep_deadline_ = 5.0;
  double resend_interval_ = 0.25;
  double staleness_bound_ = 0.5;

  Telemetry telemetry_{};
  bool have_telemetry_ = false;
  double telemetry_received_at_ = 0.0;
  std::optional<DetectionReport> pending_report_;
  std::uint64_t last_report_seq_seen_ = 0;
  bool seen_report_ = false;
  std::deque<TargetRequest> targets_;
  std::uint64_t decode_failures_ = 0;
  std::uint64_t stale_dropped_ = 0;
  bool vision_active_ = false;
};

// ---------------------------------------------------------------------------
// Split-process roles. Each returns a CLI exit status (0 ok, 1 run failure,
// 3 environment failure is raised as EndpointError by the caller's binder).

// World/robot process: owns ground truth, applies one command per tick,
// broadcasts telemetry to control and vision, rebroadcasts while idle.
inline int serve_robot(const Scenario& scn, const NetConfig& net, std::ostream& out) {
  WorldEngine engine(scn.world, scn.configs.sensor, scn.configs.control.tick_dt, scn.seed);
  UdpSocket sock;
  sock.bind(net.robot_addr);
  const sockaddr_in control = parse_addr(net.control_addr);
  const sockaddr_in vision = parse_addr(net.vision_addr);
  auto broadcast = [&] {
    const std::string bytes = encode(make_message(engine.telemetry()));
    sock.send_to(control, bytes);
    sock.send_to(vision, bytes);
  };
  broadcast();
  sock.set_receive_timeout(0.2);
  while (!interrupted()) {
    const auto bytes = sock.receive();
    if (!bytes) {
      broadcast();  // idle keepalive so peers can (re)synchronize
      continue;
    }
    const DecodeResult r = decode(*bytes);
    if (r.status != DecodeStatus::Ok || r.message->type != MessageType::Command) continue;
    const auto& cmd = std::get<VelocityCommand>(r.message->payload);
    const std::uint64_t seq = r.message->seq;
    if (seq <= engine.tick()) {
      broadcast();  // duplicate command: re-acknowledge, apply nothing
      continue;
    }
    if (seq != engine.tick() + 1) continue;  // out-of-order future seq
    const bool ok = engine.apply(cmd);
    broadcast();
    if (!ok) {
      out << "collision with " << engine.collision_subject() << "\n" << std::flush;
      return 1;
    }
  }
  return 0;
}

// Vision process: reconstructs the camera view from telemetry pose plus the
// static scenario world and publishes detection reports on the vision cadence.
inline int serve_vision(const Scenario& scn, const NetConfig& net) {
  UdpSocket sock;
  sock.bind(net.vision_addr);
  const sockaddr_in control = parse_addr(net.control_addr);
  sock.set_receive_timeout(0.2);
  while (!interrupted()) {
    const auto bytes = sock.receive();
    if (!bytes) continue;
    const DecodeResult r = decode(*bytes);
    if (r.status != DecodeStatus::Ok || r.message->type != MessageType::Telemetry) continue;
    const auto& t = std::get<Telemetry>(r.message->payload);
    if (const auto report = vision_frame(t, scn.world, scn.configs)) {
      sock.send_to(control, encode(make_message(*report)));
    }
  }
  return 0;
}

// Control process: drives the scenario targets over the UDP robot binding,
// printing mode transitions, events and per-target outcomes; with no targets
// in the scenario it serves TargetRequest datagrams until interrupted.
inline int serve_control(const Scenario& scn, const NetConfig& net, std::ostream& out) {
  UdpRobotIo io(net, scn.configs);

  struct PrintObserver final : ControlObserver {
    std::ostream* out = nullptr;
    void on_mode(Mode m) override { (*out) << "mode " << mode_name(m) << "\n" << std::flush; }
    void on_event(EventKind k, const std::string& detail) override {
      (*out) << "event " << event_kind_name(k);
      if (!detail.empty()) (*out) << ' ' << detail;
      (*out) << "\n" << std::flush;
    }
  } observer;
  observer.out = &out;

  Controller ctrl(io, scn.configs.control, &observer);
  ctrl.set_arena_bounds(scn.world.bounds);
  io.start();
  out << "vision " << (io.vision_active() ? "active" : "absent") << "\n" << std::flush;

  auto drive = [&](const Vec2& target) {
    const SendOutcome outcome = ctrl.send_to(target);
    const char* name = outcome == SendOutcome::Arrived ? "Arrived" : "Unreachable";
    out << "outcome " << name << "\n" << std::flush;
    return outcome;
  };

  try {
    if (!scn.targets.empty()) {
      for (const auto& target : scn.targets) {
        if (drive(target) != SendOutcome::Arrived) return 1;
      }
      out << "result ok\n" << std::flush;
      return 0;
    }
    while (!interrupted()) {
      io.pump(0.2);
      while (const auto t = io.pop_target()) {
        if (interrupted()) break;
        drive({t->x, t->y});
      }
    }
  } catch (const TelemetryLostError&) {
    out << "error telemetry lost\n" << std::flush;
    return 1;
  }
  return 0;
}

}  // namespace losnav
