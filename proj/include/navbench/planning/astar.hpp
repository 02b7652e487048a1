#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/world/connectivity.hpp"
#include "navbench/world/occupancy_grid.hpp"

namespace navbench {

struct GlobalPath {
  std::vector<Vec2> waypoints;  ///< cell centers, start cell first
  double cost = 0.0;            ///< meters along the grid path

  bool empty() const { return waypoints.empty(); }
  double length() const {
    double l = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) l += distance(waypoints[i - 1], waypoints[i]);
    return l;
  }
};

/// Step counts of a grid path; cost is `(orthogonal + sqrt2 * diagonal) * resolution`.
struct StepCounts {
  std::int32_t orthogonal = 0;
  std::int32_t diagonal = 0;
  double cost(double resolution) const {
    return (orthogonal + std::numbers::sqrt2 * diagonal) * resolution;
  }
};

/// 8-connected A* over an already inflated grid. Diagonal moves require both
/// adjacent orthogonal cells to be free. Returns nullopt when unreachable.
inline std::optional<GlobalPath> astar_cells(const OccupancyGrid& inflated, CellIndex start,
                                             CellIndex goal) {
  if (!inflated.in_bounds(start) || inflated.occupied(start))
    throw DomainError("astar: start in collision");
  if (!inflated.in_bounds(goal) || inflated.occupied(goal))
    throw DomainError("astar: goal in collision");
  const double res = inflated.resolution();
  if (start == goal) return GlobalPath{};

  auto heuristic = [&](CellIndex c) {
    const int dx = std::abs(c.x - goal.x), dy = std::abs(c.y - goal.y);
    const int lo = std::min(dx, dy), hi = std::max(dx, dy);
    return ((hi - lo) + std::numbers::sqrt2 * lo) * res;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = inflated.size();
  std::vector<double> g(n, inf);
  std::vector<StepCounts> steps(n);
  std::vector<std::int64_t> parent(n, -1);
  std::vector<char> closed(n, 0);

  struct Node {
    double f;
    double h;
    std::size_t idx;
    bool operator>(const Node& o) const {
      if (f != o.f) return f > o.f;
      if (h != o.h) return h > o.h;
      return idx > o.idx;
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  const std::size_t s = inflated.linear(start), t = inflated.linear(goal);
  g[s] = 0.0;
  open.push({heuristic(start), heuristic(start), s});

  constexpr int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const Node cur = open.top();
    open.pop();
    if (closed[cur.idx]) continue;
    closed[cur.idx] = 1;
    if (cur.idx == t) break;
    const CellIndex c = inflated.unlinear(cur.idx);
    for (int k = 0; k < 8; ++k) {
      const CellIndex nb{c.x + dx[k], c.y + dy[k]};
      if (!inflated.in_bounds(nb) || inflated.occupied(nb)) continue;
      const bool diag = k >= 4;
      if (diag && (inflated.occupied(CellIndex{c.x + dx[k], c.y}) ||
                   inflated.occupied(CellIndex{c.x, c.y + dy[k]})))
        continue;
      const std::size_t j = inflated.linear(nb);
      if (closed[j]) continue;
      const double cand = g[cur.idx] + (diag ? std::numbers::sqrt2 : 1.0) * res;
      if (cand < g[j]) {
        g[j] = cand;
        steps[j] = steps[cur.idx];
        ++(diag ? steps[j].diagonal : steps[j].orthogonal);
        parent[j] = static_cast<std::int64_t>(cur.idx);
        const double h = heuristic(nb);
        open.push({cand + h, h, j});
      }
    }
  }
  if (!closed[t]) return std::nullopt;

  GlobalPath path;
  for (std::int64_t i = static_cast<std::int64_t>(t); i != -1; i = parent[static_cast<std::size_t>(i)])
    path.waypoints.push_back(inflated.cell_center(inflated.unlinear(static_cast<std::size_t>(i))));
  std::reverse(path.waypoints.begin(), path.waypoints.end());
  path.cost = steps[t].cost(res);
  return path;
}

/// A* on `grid` inflated by `robot_radius`. Same-cell start and goal give an
/// empty path with cost 0.
inline std::optional<GlobalPath> astar(const OccupancyGrid& grid, Vec2 start, Vec2 goal,
                                       double robot_radius) {
  const OccupancyGrid inflated = inflate(grid, robot_radius);
  return astar_cells(inflated, inflated.cell_of(start), inflated.cell_of(goal));
}

}  // namespace navbench
