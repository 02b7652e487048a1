#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "navbench/bridge/protocol.hpp"
#include "navbench/bridge/transport.hpp"
#include "navbench/core/error.hpp"
#include "navbench/planning/local_planner.hpp"

namespace navbench::bridge {

inline constexpr std::chrono::milliseconds kDefaultDeadline{100};
inline constexpr std::chrono::milliseconds kDefaultHandshakeTimeout{5000};

/// Where an `extern:` planner lives.
struct ExternTarget {
  enum class Kind { command, tcp };
  Kind kind = Kind::command;
  std::string command;
  std::string host;
  int port = 0;
};

/// Parses `extern:cmd="path args"` (quotes optional) or `extern:tcp=host:port`.
/// Returns nullopt for ids without the `extern:` prefix; throws ConfigError when malformed.
inline std::optional<ExternTarget> parse_extern_id(const std::string& id) {
  constexpr std::string_view prefix = "extern:";
  if (id.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string rest = id.substr(prefix.size());
  ExternTarget t;
  if (rest.rfind("cmd=", 0) == 0) {
    t.kind = ExternTarget::Kind::command;
    t.command = rest.substr(4);
    if (t.command.size() >= 2 && t.command.front() == '"' && t.command.back() == '"')
      t.command = t.command.substr(1, t.command.size() - 2);
    if (t.command.empty()) throw ConfigError("planner '" + id + "': empty command");
    return t;
  }
  if (rest.rfind("tcp=", 0) == 0) {
    t.kind = ExternTarget::Kind::tcp;
    const std::string addr = rest.substr(4);
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0)
      throw ConfigError("planner '" + id + "': expected tcp=host:port");
    t.host = addr.substr(0, colon);
    try {
      std::size_t used = 0;
      t.port = std::stoi(addr.substr(colon + 1), &used);
      if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("planner '" + id + "': invalid port");
    }
    if (t.port <= 0 || t.port > 65535) throw ConfigError("planner '" + id + "': port out of range");
    return t;
  }
  throw ConfigError("planner '" + id + "': expected extern:cmd=... or extern:tcp=host:port");
}

using TransportFactory = std::function<std::unique_ptr<LineTransport>()>;

inline TransportFactory transport_factory(const ExternTarget& t) {
  if (t.kind == ExternTarget::Kind::command)
    return [cmd = t.command] { return std::make_unique<ChildProcessTransport>(cmd); };
  return [host = t.host, port = t.port] { return std::make_unique<TcpTransport>(host, port); };
}

/// One entry per observation sent: the command that answered it, or a deadline miss.
struct SessionEntry {
  enum class Kind { cmd, deadline_missed };
  Kind kind = Kind::cmd;
  double stamp = 0.0;
};

/// Local planner that forwards every tick to an external process over the line protocol.
/// Lockstep: the simulation waits for the reply, up to `deadline` of wall-clock time.
class ExternalPlanner final : public LocalPlanner {
 public:
  explicit ExternalPlanner(TransportFactory factory, std::chrono::milliseconds deadline = kDefaultDeadline,
                           std::chrono::milliseconds handshake_timeout = kDefaultHandshakeTimeout)
      : factory_(std::move(factory)), deadline_(deadline), handshake_timeout_(handshake_timeout) {}

  ~ExternalPlanner() override {
    try {
      close("aborted");
    } catch (...) {
    }
  }

  void reset(const EpisodeInfo& info) override {
    LocalPlanner::reset(info);
    close("reset");
    log_.clear();
    last_cmd_ = {};
    transport_ = factory_();

    ResetMsg msg;
    msg.episode = info.episode_id;
    msg.robot = info.robot;
    if (info.grid != nullptr)
      msg.map = {info.grid->width(), info.grid->height(), info.grid->resolution(), info.grid->origin()};
    msg.goal = info.goal;
    msg.dt = info.dt;
    msg.command_period = info.command_period;
    transport_->send_line(encode(msg));

    const auto line = transport_->recv_line(handshake_timeout_);
    if (!line) throw ProtocolError("planner sent no 'ready' within the handshake timeout");
    const ReadyMsg ready = decode_ready(*line);
    if (ready.protocol_version != kProtocolVersion)
      throw ProtocolError("protocol version mismatch: planner speaks " + std::to_string(ready.protocol_version) +
                          ", harness speaks " + std::to_string(kProtocolVersion));
    if (ready.episode != info.episode_id)
      throw ProtocolError("episode id mismatch in 'ready': expected '" + info.episode_id + "', got '" +
                          ready.episode + "'");
  }

  VelocityCommand plan(const Observation& obs) override {
    if (!transport_) throw ProtocolError("plan() called before a successful reset()");
    ObservationMsg msg;
    msg.episode = info_.episode_id;
    msg.stamp = obs.stamp;
    if (obs.scan != nullptr) msg.scan = obs.scan->ranges;
    msg.pose = obs.state.pose;
    msg.velocity = obs.state.velocity;
    msg.subgoal = obs.subgoal;
    msg.goal = obs.goal;
    msg.robot = info_.robot.name;
    transport_->send_line(encode(msg));

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + deadline_;
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
      std::optional<std::string> line;
      if (left.count() > 0) line = transport_->recv_line(left);
      if (!line) {
        log_.push_back({SessionEntry::Kind::deadline_missed, obs.stamp});
        if (info_.on_event) info_.on_event("deadline_missed", "no command within " +
                                                                  std::to_string(deadline_.count()) + " ms");
        return last_cmd_;
      }
      const CommandMsg cmd = decode_command(*line);
      if (cmd.episode != info_.episode_id)
        throw ProtocolError("episode id mismatch in 'cmd': expected '" + info_.episode_id + "', got '" +
                            cmd.episode + "'");
      if (cmd.stamp < obs.stamp) continue;  // late answer to an earlier observation
      if (cmd.stamp > obs.stamp)
        throw ProtocolError("'cmd' stamp " + std::to_string(cmd.stamp) + " is ahead of the observation stamp " +
                            std::to_string(obs.stamp));
      last_cmd_ = clamp_action(cmd.cmd, info_.robot);
      log_.push_back({SessionEntry::Kind::cmd, obs.stamp});
      return last_cmd_;
    }
  }

  void close(const std::string& status) override {
    if (!transport_) return;
    try {
      transport_->send_line(encode(CloseMsg{info_.episode_id, status}));
    } catch (const TransportError&) {
    }
    transport_.reset();
  }

  const std::vector<SessionEntry>& session_log() const { return log_; }
  std::chrono::milliseconds deadline() const { return deadline_; }

 private:
  TransportFactory factory_;
  std::chrono::milliseconds deadline_;
  std::chrono::milliseconds handshake_timeout_;
  std::unique_ptr<LineTransport> transport_;
  VelocityCommand last_cmd_;
  std::vector<SessionEntry> log_;
};

}  // namespace navbench::bridge
