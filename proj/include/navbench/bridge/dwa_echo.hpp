#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "navbench/bridge/protocol.hpp"
#include "navbench/bridge/transport.hpp"
#include "navbench/planning/dwa.hpp"

namespace navbench::bridge {

/// Planner side of the protocol backed by the built-in DWA: the reference
/// external planner. Serves sessions on `t` until the peer disconnects.
/// Returns the number of commands sent.
inline std::size_t serve_dwa_echo(LineTransport& t, DwaConfig base = {}) {
  std::optional<ResetMsg> session;
  DwaConfig cfg = base;
  std::size_t sent = 0;
  for (;;) {
    std::optional<std::string> line;
    try {
      line = t.recv_line(std::chrono::hours(24));
    } catch (const TransportError&) {
      return sent;  // peer closed
    }
    if (!line) continue;
    const std::string type = message_type(*line);
    if (type == "reset") {
      const ResetMsg reset = decode_reset(*line);
      if (reset.protocol_version != kProtocolVersion) {
        t.send_line(nlohmann::json{{"type", "refuse"},
                                   {"episode", reset.episode},
                                   {"reason", "unsupported protocol_version " +
                                                  std::to_string(reset.protocol_version)}}
                        .dump());
        session.reset();
        continue;
      }
      session = reset;
      cfg = base;
      cfg.command_period = reset.command_period;
      t.send_line(encode(ReadyMsg{kProtocolVersion, reset.episode}));
    } else if (type == "observe") {
      if (!session) throw ProtocolError("'observe' before 'reset'");
      const ObservationMsg obs = decode_observation(*line);
      RobotState state;
      state.pose = obs.pose;
      state.velocity = obs.velocity;
      state.stamp = obs.stamp;
      Scan scan;
      scan.ranges = obs.scan;
      scan.stamp = obs.stamp;
      const VelocityCommand cmd = dwa_plan(state, scan, obs.subgoal, session->robot, cfg);
      t.send_line(encode(CommandMsg{obs.episode, obs.stamp, cmd}));
      ++sent;
    } else if (type == "close") {
      session.reset();
    }
  }
}

}  // namespace navbench::bridge
