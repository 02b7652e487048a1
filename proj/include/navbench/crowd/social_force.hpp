#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/core/random.hpp"
#include "navbench/world/connectivity.hpp"
#include "navbench/world/occupancy_grid.hpp"
#include "navbench/world/queries.hpp"

namespace navbench {

/// Helbing-style social force parameters (isotropic, exponential potentials).
struct SocialForceParams {
  double desired_speed = 0.3;         ///< v0, m/s
  double relaxation_time = 0.5;       ///< tau, s
  double interaction_strength = 2.1;  ///< V0, m^2/s^2
  double interaction_range = 0.3;     ///< sigma, m
  double wall_strength = 10.0;        ///< U0, m^2/s^2
  double wall_range = 0.2;            ///< R, m
  double agent_radius = 0.3;          ///< m

  void validate() const {
    for (double v : {desired_speed, relaxation_time, interaction_strength, interaction_range,
                     wall_strength, wall_range, agent_radius})
      if (!(v > 0.0)) throw DomainError("social force parameters must be strictly positive");
  }
  friend bool operator==(const SocialForceParams&, const SocialForceParams&) = default;
};

enum class Activity { walking, running, waiting, talking };

inline const char* to_string(Activity a) {
  switch (a) {
    case Activity::walking: return "walking";
    case Activity::running: return "running";
    case Activity::waiting: return "waiting";
    case Activity::talking: return "talking";
  }
  return "walking";
}

/// Social state of a pedestrian. Waiting and talking agents stand still and
/// keep exerting repulsion; a waiting agent resumes walking when its timer ends.
struct SocialState {
  Activity activity = Activity::walking;
  double wait_remaining = 0.0;  ///< seconds, waiting only
  int group_id = -1;            ///< talking only

  static SocialState walking() { return {}; }
  static SocialState running() { return {Activity::running, 0.0, -1}; }
  static SocialState waiting(double seconds) {
    if (!(seconds >= 0.0)) throw DomainError("waiting duration must be >= 0");
    return {Activity::waiting, seconds, -1};
  }
  static SocialState talking(int group) { return {Activity::talking, 0.0, group}; }

  bool stationary() const { return activity == Activity::waiting || activity == Activity::talking; }
  friend bool operator==(const SocialState&, const SocialState&) = default;
};

struct SocialAgent {
  int id = 0;
  Vec2 position;
  Vec2 velocity;
  std::vector<Vec2> waypoints;
  std::size_t waypoint_index = 0;
  SocialState state;
  SocialForceParams params;

  Vec2 current_waypoint() const { return waypoints.empty() ? position : waypoints[waypoint_index]; }
  double speed_cap() const {
    const double cap = 1.5 * params.desired_speed;
    return state.activity == Activity::running ? 2.0 * cap : cap;
  }
  Disc disc() const { return {position, params.agent_radius}; }
  friend bool operator==(const SocialAgent&, const SocialAgent&) = default;
};

inline std::vector<Disc> discs_of(std::span<const SocialAgent> agents) {
  std::vector<Disc> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.disc());
  return out;
}

/// Overload of the clearance query taking pedestrians directly.
inline double distance_to_nearest_obstacle(const OccupancyGrid& grid,
                                           std::span<const SocialAgent> agents, Vec2 p) {
  const auto discs = discs_of(agents);
  return distance_to_nearest_obstacle(grid, std::span<const Disc>(discs), p);
}

struct ForceTerms {
  Vec2 driving;
  Vec2 agents;
  Vec2 walls;
  Vec2 total() const { return driving + agents + walls; }
};

/// Walls farther than this many wall ranges beyond the agent surface are ignored
/// (contribution below e^-10 of the contact force).
inline constexpr double kWallCutoffRanges = 10.0;

/// Waypoint acceptance radius for pedestrians.
inline constexpr double kWaypointTolerance = 0.3;

/// Force terms acting on `agent`. `others` may contain `agent` itself (matched by id).
inline ForceTerms social_force_terms(const SocialAgent& agent, std::span<const SocialAgent> others,
                                     const OccupancyGrid& grid) {
  const auto& p = agent.params;
  ForceTerms f;

  if (!agent.state.stationary()) {
    const double v0 = agent.state.activity == Activity::running ? 2.0 * p.desired_speed
                                                                : p.desired_speed;
    const Vec2 e = normalized(agent.current_waypoint() - agent.position);
    f.driving = (v0 * e - agent.velocity) / p.relaxation_time;
  }

  for (const auto& o : others) {
    if (o.id == agent.id) continue;
    Vec2 delta = agent.position - o.position;
    const double dist = norm(delta);
    Vec2 n = dist > 0.0 ? delta / dist : Vec2{agent.id < o.id ? -1.0 : 1.0, 0.0};
    const double surface = dist - (p.agent_radius + o.params.agent_radius);
    f.agents += (p.interaction_strength / p.interaction_range) *
                std::exp(-surface / p.interaction_range) * n;
  }

  const auto wall = nearest_occupied(grid, agent.position,
                                     p.agent_radius + kWallCutoffRanges * p.wall_range);
  if (wall.found()) {
    Vec2 away = agent.position - wall.point;
    if (norm(away) == 0.0) {
      const CellIndex c = grid.cell_of(agent.position);
      away = agent.position - grid.cell_center(c);
    }
    const double surface = wall.distance - p.agent_radius;
    f.walls = (p.wall_strength / p.wall_range) * std::exp(-surface / p.wall_range) * normalized(away);
  }
  return f;
}

/// Total acceleration (m/s^2) on `agent`: driving + agent repulsion + wall repulsion.
inline Vec2 social_force(const SocialAgent& agent, std::span<const SocialAgent> others,
                         const OccupancyGrid& grid) {
  return social_force_terms(agent, others, grid).total();
}

enum class CrowdMode {
  loop,     ///< scenario mode: after the last waypoint return to the first
  respawn,  ///< random mode: re-spawn at a fresh free position with a new goal
};

/// Minimum distance between a random pedestrian's start and goal.
inline constexpr double kMinAgentTravel = 1.0;

namespace detail {

inline bool clear_of(Vec2 p, double radius, std::span<const Disc> keep_clear) {
  for (const auto& d : keep_clear)
    if (distance(p, d.center) < radius + d.radius) return false;
  return true;
}

inline std::optional<Vec2> place_disc(const OccupancyGrid& grid, const FreeRegion& region,
                                      double radius, std::span<const Disc> keep_clear, Rng& rng,
                                      int attempts) {
  if (region.empty()) return std::nullopt;
  for (int i = 0; i < attempts; ++i) {
    const Vec2 p = region.sample(rng);
    if (is_placeable_disc(grid, p, radius) && clear_of(p, radius, keep_clear)) return p;
  }
  return std::nullopt;
}

inline std::optional<Vec2> place_goal(const OccupancyGrid& grid, const FreeRegion& region,
                                      double radius, Vec2 start, Rng& rng, int attempts) {
  for (int i = 0; i < attempts; ++i) {
    const Vec2 g = region.sample(rng);
    if (distance(g, start) >= kMinAgentTravel && is_placeable_disc(grid, g, radius)) return g;
  }
  return std::nullopt;
}

}  // namespace detail

inline constexpr int kSpawnAttempts = 2000;

/// Places `count` walking pedestrians with random start and goal drawn from the
/// largest free region. Starts avoid each other and every disc in `keep_clear`.
inline std::vector<SocialAgent> spawn_agents(std::size_t count, const OccupancyGrid& grid, Rng& rng,
                                             const SocialForceParams& params = {},
                                             std::span<const Disc> keep_clear = {},
                                             int first_id = 0) {
  params.validate();
  std::vector<SocialAgent> agents;
  if (count == 0) return agents;
  const FreeRegion region(grid, params.agent_radius);
  std::vector<Disc> occupied(keep_clear.begin(), keep_clear.end());
  for (std::size_t k = 0; k < count; ++k) {
    const auto start =
        detail::place_disc(grid, region, params.agent_radius, occupied, rng, kSpawnAttempts);
    if (!start) throw GenerationError("spawn_agents: no free placement for agent " + std::to_string(k));
    const auto goal = detail::place_goal(grid, region, params.agent_radius, *start, rng, kSpawnAttempts);
    if (!goal) throw GenerationError("spawn_agents: no goal for agent " + std::to_string(k));
    SocialAgent a;
    a.id = first_id + static_cast<int>(k);
    a.position = *start;
    a.waypoints = {*goal};
    a.params = params;
    occupied.push_back(a.disc());
    agents.push_back(std::move(a));
  }
  return agents;
}

/// One semi-implicit Euler step of the crowd. Forces are evaluated on the
/// pre-step snapshot, so the result does not depend on agent order. Re-spawned
/// agents avoid the other agents and every disc in `keep_clear`.
inline std::vector<SocialAgent> step_crowd(std::vector<SocialAgent> agents, const OccupancyGrid& grid,
                                           double dt, CrowdMode mode, Rng& rng,
                                           const FreeRegion* region = nullptr,
                                           std::span<const Disc> keep_clear = {}) {
  if (!(dt > 0.0)) throw DomainError("step_crowd: dt must be positive");
  const std::vector<SocialAgent> snapshot = agents;
  std::vector<Vec2> forces(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i)
    forces[i] = social_force(snapshot[i], snapshot, grid);

  std::optional<FreeRegion> own_region;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    SocialAgent& a = agents[i];
    if (a.state.activity == Activity::waiting) {
      a.velocity = {};
      a.state.wait_remaining -= dt;
      if (a.state.wait_remaining <= 1e-12) a.state = SocialState::walking();
      continue;
    }
    if (a.state.activity == Activity::talking) {
      a.velocity = {};
      continue;
    }
    a.velocity += forces[i] * dt;
    const double speed = norm(a.velocity);
    if (speed > a.speed_cap()) a.velocity *= a.speed_cap() / speed;
    a.position += a.velocity * dt;

    if (a.waypoints.empty() || distance(a.position, a.current_waypoint()) >= kWaypointTolerance)
      continue;
    if (a.waypoint_index + 1 < a.waypoints.size()) {
      ++a.waypoint_index;
      continue;
    }
    if (mode == CrowdMode::loop) {
      a.waypoint_index = 0;
      continue;
    }
    if (region == nullptr) {
      if (!own_region) own_region.emplace(grid, a.params.agent_radius);
      region = &*own_region;
    }
    std::vector<Disc> others(keep_clear.begin(), keep_clear.end());
    for (std::size_t j = 0; j < agents.size(); ++j)
      if (j != i) others.push_back(agents[j].disc());
    const auto start =
        detail::place_disc(grid, *region, a.params.agent_radius, others, rng, kSpawnAttempts);
    const auto goal = start ? detail::place_goal(grid, *region, a.params.agent_radius, *start, rng,
                                                 kSpawnAttempts)
                            : std::nullopt;
    if (start && goal) {
      a.position = *start;
      a.velocity = {};
      a.waypoints = {*goal};
    }
    // crowded map: keep walking the same route
    a.waypoint_index = 0;
  }
  return agents;
}

/// A crowd bound to one map: owns the agents, the respawn RNG and the cached
/// spawn region. Belongs to a single episode.
class Crowd {
 public:
  Crowd(const OccupancyGrid& grid, std::vector<SocialAgent> agents, CrowdMode mode,
        std::uint64_t seed)
      : grid_(&grid), agents_(std::move(agents)), mode_(mode), rng_(seed) {}

  void step(double dt, std::span<const Disc> keep_clear = {}) {
    const FreeRegion* region = nullptr;
    if (mode_ == CrowdMode::respawn && !agents_.empty()) {
      if (!region_) region_.emplace(*grid_, agents_.front().params.agent_radius);
      region = &*region_;
    }
    agents_ = step_crowd(std::move(agents_), *grid_, dt, mode_, rng_, region, keep_clear);
  }

  /// Replaces every pedestrian by a fresh random placement.
  void reset_random(std::size_t count, const SocialForceParams& params = {},
                    std::span<const Disc> keep_clear = {}) {
    agents_ = spawn_agents(count, *grid_, rng_, params, keep_clear);
    region_.reset();
  }

  const std::vector<SocialAgent>& agents() const { return agents_; }
  std::vector<Disc> discs() const { return discs_of(agents_); }
  CrowdMode mode() const { return mode_; }

 private:
  const OccupancyGrid* grid_;
  std::vector<SocialAgent> agents_;
  CrowdMode mode_;
  Rng rng_;
  std::optional<FreeRegion> region_;
};

}  // namespace navbench
