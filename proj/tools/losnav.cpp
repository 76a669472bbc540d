// losnav CLI: scenario runner, interactive REPL, and split-process UDP roles.
// Exit codes: 0 all targets arrived, 1 run failure, 2 input error,
// 3 environment error.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

#include <CLI11.hpp>

#include "losnav/controller.hpp"
#include "losnav/protocol.hpp"
#include "losnav/roles.hpp"
#include "losnav/sim.hpp"
#include "losnav/udp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitEnvironmentError = 3;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw losnav::EndpointError("cannot open output file: " + path.string());
  out << content;
  if (!out) throw losnav::EndpointError("cannot write output file: " + path.string());
}

const char* outcome_name(losnav::SendOutcome out) {
  switch (out) {
    case losnav::SendOutcome::Arrived: return "Arrived";
    case losnav::SendOutcome::Unreachable: return "Unreachable";
    case losnav::SendOutcome::DegenerateTarget: return "DegenerateTarget";
  }
  return "?";
}

int cmd_run(const std::string& scenario_path, bool plot, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<double> dt, bool real_time) {
  losnav::Scenario scn;
  try {
    scn = losnav::load_scenario(scenario_path);
    if (seed) scn.seed = *seed;
    if (dt) scn.configs.control.tick_dt = *dt;
    losnav::validate_scenario(scn);
  } catch (const losnav::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitInputError;
  }

  const losnav::RunResult result = losnav::run(scn, real_time);
  const auto& s = result.summary;

  std::filesystem::path dir(out_dir);
  try {
    std::filesystem::create_directories(dir);
    write_file(dir / "trajectory.csv", losnav::trajectory_csv(result.log));
    write_file(dir / "events.csv", losnav::events_csv(result.log));
    if (plot) write_file(dir / "plot.svg", losnav::render_plot(result.log, scn));
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kExitEnvironmentError;
  }

  std::cout << "scenario: " << scn.label << "\n";
  std::cout << "targets: " << scn.targets.size() << "\n";
  std::cout << "outcomes:";
  for (const auto out : s.outcomes) std::cout << ' ' << outcome_name(out);
  std::cout << "\n";
  std::cout << "collision: " << (s.collided ? s.collision_subject : "none") << "\n";
  std::cout << "final_error: " << s.final_error << "\n";
  std::cout << "path_length: " << s.path_length << "\n";
  std::cout << "min_clearance: " << s.min_clearance << "\n";
  std::cout << "duration: " << s.duration << "\n";
  if (!scn.world.devices.empty()) {
    std::cout << "los: " << (s.los_final ? "true" : "false") << "\n";
    std::cout << "device_distance: " << s.device_distance_final << "\n";
  }
  std::cout << "reports: emitted " << s.reports_emitted << " dropped " << s.reports_dropped
            << " stale " << s.stale_reports_dropped << "\n";
  std::cout << "wrote: " << (dir / "trajectory.csv").string() << " "
            << (dir / "events.csv").string();
  if (plot) std::cout << " " << (dir / "plot.svg").string();
  std::cout << "\n";
  return s.all_arrived ? kExitOk : kExitRunFailure;
}

// ---------------------------------------------------------------------------
// REPL

// Real-time in-process robot: ground-truth engine plus an injection mailbox.
// No synthetic vision — detection reports enter only through `obstacle` and
// `clear` commands, mirroring manual operation of the control module.
class ReplIo final : public losnav::RobotInterface {
 public:
  ReplIo(const losnav::Scenario& scn)
      : engine_(scn.world, scn.configs.sensor, scn.configs.control.tick_dt, scn.seed),
        dt_(scn.configs.control.tick_dt) {}

  void send_command(const losnav::VelocityCommand& cmd) override {
    if (stop_.load()) throw losnav::TelemetryLostError{};
    bool ok = true;
    std::string subject;
    {
      std::lock_guard lock(mu_);
      ok = engine_.apply(cmd);
      if (!ok) subject = engine_.collision_subject();
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(dt_));
    if (!ok) throw losnav::CollisionHaltError(subject);
  }

  losnav::Telemetry latest_telemetry() override {
    if (stop_.load()) throw losnav::TelemetryLostError{};
    std::lock_guard lock(mu_);
    return engine_.telemetry();
  }

  std::optional<losnav::DetectionReport> poll_report() override {
    std::lock_guard lock(mu_);
    return std::exchange(pending_, std::nullopt);
  }

  void inject(losnav::DetectionReport report) {
    std::lock_guard lock(mu_);
    pending_ = std::move(report);
  }

  losnav::Pose2D pose() {
    std::lock_guard lock(mu_);
    return engine_.world().mrp;
  }

  void request_stop() { stop_.store(true); }

 private:
  std::mutex mu_;
  losnav::WorldEngine engine_;
  double dt_;
  std::optional<losnav::DetectionReport> pending_;
  std::atomic<bool> stop_{false};
};

void print_usage_repl() {
  std::cout << "commands:\n"
               "  target X Y                   drive to (X, Y)\n"
               "  obstacle front|left|right [dist]   inject a detection report\n"
               "  clear                        inject an empty detection report\n"
               "  state                        print controller state\n"
               "  quit                         exit\n";
}

int cmd_repl(const std::string& scenario_path, bool remote, const losnav::NetConfig& net) {
  losnav::Scenario scn;
  try {
    if (!scenario_path.empty()) {
      scn = losnav::load_scenario(scenario_path);
    } else {
      scn.label = "repl";
      losnav::validate_scenario(scn);
    }
  } catch (const losnav::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitInputError;
  }

  // Remote mode: encode injections/targets and send them to a live control
  // process; state lives remotely.
  if (remote) {
    losnav::UdpSocket sock;
    try {
      sock.bind_ephemeral();
    } catch (const losnav::EndpointError& e) {
      std::cerr << "endpoint error: " << e.what() << "\n";
      return kExitEnvironmentError;
    }
    const sockaddr_in control = losnav::parse_addr(net.control_addr);
    std::uint64_t seq = 0;
    std::string line;
    std::cout << "remote repl; control at " << net.control_addr << "\n> " << std::flush;
    while (std::getline(std::cin, line)) {
      std::istringstream ls(line);
      std::string cmd;
      if (!(ls >> cmd)) {
        std::cout << "> " << std::flush;
        continue;
      }
      try {
        if (cmd == "quit") break;
        if (cmd == "target") {
          double x = 0.0, y = 0.0;
          if (!(ls >> x >> y)) throw std::invalid_argument("usage: target X Y");
          sock.send_to(control, losnav::encode(losnav::make_message(
                                    losnav::TargetRequest{x, y}, ++seq, 0)));
        } else if (cmd == "obstacle" || cmd == "clear") {
          losnav::DetectionReport report{++seq, 0, {}};
          if (cmd == "obstacle") {
            std::string zone_word;
            double dist = 0.5;
            if (!(ls >> zone_word)) throw std::invalid_argument("usage: obstacle front|left|right [dist]");
            ls >> dist;
            losnav::Zone zone = losnav::Zone::Front;
            if (zone_word == "left") zone = losnav::Zone::Left;
            else if (zone_word == "right") zone = losnav::Zone::Right;
            else if (zone_word != "front") throw std::invalid_argument("zone must be front|left|right");
            report.detections.push_back(
                {losnav::DetectionKind::Obstacle, zone, dist,
                 losnav::proximity_gate(losnav::DetectionKind::Obstacle, dist,
                                        scn.configs.proximity),
                 "manual"});
          }
          sock.send_to(control, losnav::encode(losnav::make_message(report)));
        } else if (cmd == "state") {
          std::cout << "state is tracked by the remote control process\n";
        } else {
          print_usage_repl();
        }
      } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        print_usage_repl();
      }
      std::cout << "> " << std::flush;
    }
    return kExitOk;
  }

  ReplIo io(scn);
  struct PrintObserver final : losnav::ControlObserver {
    std::mutex mu;
    void on_event(losnav::EventKind k, const std::string& detail) override {
      std::lock_guard lock(mu);
      std::cout << "[event] " << losnav::event_kind_name(k);
      if (!detail.empty()) std::cout << ' ' << detail;
      std::cout << "\n" << std::flush;
    }
  } observer;
  losnav::Controller ctrl(io, scn.configs.control, &observer);
  ctrl.set_arena_bounds(scn.world.bounds);

  std::thread worker;
  std::atomic<bool> busy{false};
  auto join_worker = [&] {
    if (worker.joinable()) worker.join();
  };

  std::uint64_t inject_seq = 0;
  std::string line;
  std::cout << "losnav repl (in-process world: " << scn.label << ")\n";
  print_usage_repl();
  std::cout << "> " << std::flush;
  while (std::getline(std::cin, line)) {
    std::istringstream ls(line);
    std::string cmd;
    if (!(ls >> cmd)) {
      std::cout << "> " << std::flush;
      continue;
    }
    if (cmd == "quit") break;
    try {
      if (cmd == "target") {
        double x = 0.0, y = 0.0;
        if (!(ls >> x >> y)) throw std::invalid_argument("usage: target X Y");
        if (busy.load()) {
          std::cout << "busy: a target is already active\n";
        } else {
          join_worker();
          busy.store(true);
          worker = std::thread([&ctrl, &busy, x, y] {
            try {
              const auto out = ctrl.send_to({x, y});
              std::cout << "[result] " << outcome_name(out) << "\n> " << std::flush;
            } catch (const losnav::CollisionHaltError& e) {
              std::cout << "[result] collision: " << e.what() << "\n> " << std::flush;
            } catch (const losnav::TelemetryLostError&) {
              std::cout << "[result] aborted\n> " << std::flush;
            }
            busy.store(false);
          });
        }
      } else if (cmd == "obstacle" || cmd == "clear") {
        losnav::DetectionReport report{++inject_seq, 0, {}};
        if (cmd == "obstacle") {
          std::string zone_word;
          double dist = 0.5;
          if (!(ls >> zone_word)) throw std::invalid_argument("usage: obstacle front|left|right [dist]");
          ls >> dist;
          losnav::Zone zone = losnav::Zone::Front;
          if (zone_word == "left") zone = losnav::Zone::Left;
          else if (zone_word == "right") zone = losnav::Zone::Right;
          else if (zone_word != "front") throw std::invalid_argument("zone must be front|left|right");
          report.detections.push_back(
              {losnav::DetectionKind::Obstacle, zone, dist,
               losnav::proximity_gate(losnav::DetectionKind::Obstacle, dist,
                                      scn.configs.proximity),
               "manual"});
        }
        // Round-trip through the wire format: injections take the same path
        // as real reports and are byte-identical to equivalent ones.
        const std::string bytes = losnav::encode(losnav::make_message(report));
        const auto decoded = losnav::decode(bytes);
        if (decoded.status != losnav::DecodeStatus::Ok) {
          throw std::runtime_error("internal: injection failed to round-trip");
        }
        io.inject(std::get<losnav::DetectionReport>(decoded.message->payload));
        std::cout << "injected " << bytes << "\n";
      } else if (cmd == "state") {
        const auto st = ctrl.state();
        const auto pose = io.pose();
        std::cout << "mode: " << losnav::mode_name(st.mode);
        if (st.mode == losnav::Mode::Failed) std::cout << " (" << st.failure_reason << ")";
        std::cout << "\npose: x " << pose.position.x << " y " << pose.position.y << " theta "
                  << pose.heading << "\n";
        if (st.target) {
          std::cout << "target: " << st.target->x << " " << st.target->y << "\n";
        } else {
          std::cout << "target: none\n";
        }
        std::cout << "recursion_depth: " << st.recursion_depth
                  << "\navoid_depth: " << st.avoid_depth
                  << "\nfront_blocked: " << (st.front_blocked ? "true" : "false")
                  << "\nlast_report_seq: " << st.last_report_seq << "\n";
      } else {
        print_usage_repl();
      }
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
      print_usage_repl();
    }
    std::cout << "> " << std::flush;
  }
  io.request_stop();
  join_worker();
  return kExitOk;
}

int cmd_serve(const std::string& role, const std::string& scenario_path,
              const losnav::NetConfig& net) {
  losnav::Scenario scn;
  try {
    scn = losnav::load_scenario(scenario_path);
  } catch (const losnav::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitInputError;
  }
  losnav::install_sigint_handler();
  try {
    if (role == "robot") return losnav::serve_robot(scn, net, std::cout);
    if (role == "vision") return losnav::serve_vision(scn, net);
    if (role == "control") return losnav::serve_control(scn, net, std::cout);
    std::cerr << "unknown role: " << role << " (expected vision|control|robot)\n";
    return kExitInputError;
  } catch (const losnav::EndpointError& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return kExitEnvironmentError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"losnav: deterministic 2D navigation simulation and control"};
  app.require_subcommand(1);

  losnav::NetConfig net;
  net.apply_env();
  auto add_net_flags = [&](CLI::App* sub) {
    sub->add_option("--vision-addr", net.vision_addr, "vision endpoint HOST:PORT");
    sub->add_option("--control-addr", net.control_addr, "control endpoint HOST:PORT");
    sub->add_option("--robot-addr", net.robot_addr, "robot endpoint HOST:PORT");
  };

  // run
  std::string run_scenario;
  std::string out_dir = ".";
  bool plot = false;
  bool real_time = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  auto* run_cmd = app.add_subcommand("run", "execute a scenario in virtual time");
  run_cmd->add_option("scenario", run_scenario, "scenario file")->required();
  run_cmd->add_flag("--plot", plot, "write plot.svg");
  run_cmd->add_option("--out", out_dir, "output directory (default .)");
  run_cmd->add_option("--seed", seed, "override scenario seed");
  run_cmd->add_option("--dt", dt, "override control tick dt (seconds)");
  run_cmd->add_flag("--real-time", real_time, "pace the run at wall-clock speed");

  // repl
  std::string repl_scenario;
  bool remote = false;
  auto* repl_cmd = app.add_subcommand("repl", "interactive control session");
  repl_cmd->add_option("--scenario", repl_scenario, "world to load (default: empty arena)");
  repl_cmd->add_flag("--remote", remote, "talk to a UDP control process instead");
  add_net_flags(repl_cmd);

  // serve
  std::string role;
  std::string serve_scenario;
  auto* serve_cmd = app.add_subcommand("serve", "run one UDP role: vision|control|robot");
  serve_cmd->add_option("role", role, "vision|control|robot")->required();
  serve_cmd->add_option("--scenario", serve_scenario, "scenario file")->required();
  add_net_flags(serve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_scenario, plot, out_dir, seed, dt, real_time);
    if (repl_cmd->parsed()) return cmd_repl(repl_scenario, remote, net);
    if (serve_cmd->parsed()) return cmd_serve(role, serve_scenario, net);
  } catch (const losnav::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const losnav::EndpointError& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return kExitEnvironmentError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitInputError;
}
