#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "navbench/bridge/external_planner.hpp"
#include "navbench/core/error.hpp"
#include "navbench/planning/local_planner.hpp"

namespace navbench {

struct PlannerOptions {
  DwaConfig dwa;
  std::chrono::milliseconds deadline = bridge::kDefaultDeadline;
  std::chrono::milliseconds handshake_timeout = bridge::kDefaultHandshakeTimeout;
};

/// Throws ConfigError unless `id` names a known planner. Does not start anything.
inline void check_planner_id(const std::string& id) {
  if (id == "dwa" || id == "teleport-oracle") return;
  if (bridge::parse_extern_id(id)) return;
  throw ConfigError("unknown planner '" + id + "' (expected dwa, teleport-oracle, or extern:...)");
}

/// Builds a fresh planner instance for one episode runner.
inline std::unique_ptr<LocalPlanner> make_planner(const std::string& id, const PlannerOptions& opt = {}) {
  if (id == "dwa") return std::make_unique<DwaPlanner>(opt.dwa);
  if (id == "teleport-oracle") return std::make_unique<StraightLinePlanner>();
  if (auto target = bridge::parse_extern_id(id))
    return std::make_unique<bridge::ExternalPlanner>(bridge::transport_factory(*target), opt.deadline,
                                                     opt.handshake_timeout);
  check_planner_id(id);
  return nullptr;
}

}  // namespace navbench
