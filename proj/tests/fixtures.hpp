#pragma once

// Shared scenario fixtures for the harness suites and the acceptance binary.

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "navbench/task/scenario.hpp"
#include "navbench/world/map_io.hpp"

namespace fixture {

using namespace navbench;

/// Walled room of `side` meters at 5 cm resolution.
inline OccupancyGrid room(double side = 10.0) {
  const int n = static_cast<int>(std::lround(side / 0.05));
  OccupancyGrid g(n, n, 0.05);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < 3; ++t) {
      g.set_occupied(CellIndex{i, t});
      g.set_occupied(CellIndex{i, n - 1 - t});
      g.set_occupied(CellIndex{t, i});
      g.set_occupied(CellIndex{n - 1 - t, i});
    }
  return g;
}

/// Robot crossing a 10 m room diagonally while up to ten pedestrians patrol
/// vertical lanes across its path. `variant` shifts start and goal.
inline Scenario crossing(int pedestrians, const std::string& robot = "turtlebot3", int variant = 0) {
  Scenario s;
  s.name = "crossing" + std::to_string(variant);
  s.map.file = "room.json";
  const double shift = 0.35 * (variant % 5);
  const bool mirrored = (variant / 5) % 2 == 1;
  s.robot.spec = robot;
  s.robot.start = {1.2 + shift, mirrored ? 8.8 : 1.2, mirrored ? -0.7 : 0.7};
  s.robot.goal = {8.8 - shift, mirrored ? 1.2 : 8.8};
  for (int i = 0; i < pedestrians; ++i) {
    PedestrianSpec p;
    const double x = 2.0 + 0.65 * (i % 10);
    const double y = i % 2 == 0 ? 7.0 : 3.0;
    p.start = {x, y};
    p.waypoints = {{x, 10.0 - y}, {x, y}};
    p.v0 = 0.3;
    s.pedestrians.push_back(p);
  }
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("navbench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Writes room.{pgm,json} and `<name>.json` for `s` into `dir`; returns the scenario path.
inline std::filesystem::path write_scenario(const std::filesystem::path& dir, const Scenario& s,
                                            const std::string& name = "scenario") {
  if (!std::filesystem::exists(dir / "room.json")) save_map(room(), dir / "room");
  const auto path = dir / (name + ".json");
  save_scenario(s, path);
  return path;
}

}  // namespace fixture
