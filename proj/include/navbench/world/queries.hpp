#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/world/occupancy_grid.hpp"

namespace navbench {

/// A circular dynamic obstacle (pedestrian footprint).
struct Disc {
  Vec2 center;
  double radius = 0.0;
};

struct NearestOccupied {
  double distance = std::numeric_limits<double>::infinity();
  Vec2 point{};  ///< closest point on the closest occupied cell
  bool found() const { return std::isfinite(distance); }
};

/// Distance from `p` to the closest occupied cell square (0 inside one).
/// Searches Chebyshev rings around the cell containing `p` and stops once no
/// farther ring can beat the current best or `max_distance` is exceeded.
inline NearestOccupied nearest_occupied(
    const OccupancyGrid& grid, Vec2 p,
    double max_distance = std::numeric_limits<double>::infinity()) {
  NearestOccupied best;
  const CellIndex c = grid.cell_of(p);
  const double res = grid.resolution();
  const int max_ring = std::max({std::abs(c.x), std::abs(grid.width() - 1 - c.x), std::abs(c.y),
                                 std::abs(grid.height() - 1 - c.y)});
  auto visit = [&](int x, int y) {
    const CellIndex cell{x, y};
    if (!grid.occupied(cell)) return;
    const Vec2 q = closest_point_on_box(p, grid.cell_min(cell), grid.cell_max(cell));
    const double d = distance(p, q);
    if (d < best.distance) {
      best.distance = d;
      best.point = q;
    }
  };
  for (int k = 0; k <= max_ring; ++k) {
    const double lower_bound = (k - 1) * res;
    if (lower_bound > best.distance || lower_bound > max_distance) break;
    if (k == 0) {
      visit(c.x, c.y);
      continue;
    }
    const int x0 = c.x - k, x1 = c.x + k, y0 = c.y - k, y1 = c.y + k;
    const int xs = std::max(x0, 0), xe = std::min(x1, grid.width() - 1);
    const int ys = std::max(y0 + 1, 0), ye = std::min(y1 - 1, grid.height() - 1);
    if (y0 >= 0 && y0 < grid.height())
      for (int x = xs; x <= xe; ++x) visit(x, y0);
    if (y1 >= 0 && y1 < grid.height())
      for (int x = xs; x <= xe; ++x) visit(x, y1);
    if (x0 >= 0 && x0 < grid.width())
      for (int y = ys; y <= ye; ++y) visit(x0, y);
    if (x1 >= 0 && x1 < grid.width())
      for (int y = ys; y <= ye; ++y) visit(x1, y);
  }
  if (best.distance > max_distance) return {};
  return best;
}

/// Clearance from `p` to static cells and to the surface of each disc, clamped at 0.
inline double distance_to_nearest_obstacle(const OccupancyGrid& grid, std::span<const Disc> discs,
                                           Vec2 p) {
  double best = nearest_occupied(grid, p).distance;
  for (const Disc& d : discs) best = std::min(best, distance(p, d.center) - d.radius);
  return std::max(best, 0.0);
}

/// True iff no occupied cell touches the closed disc.
inline bool is_free_disc(const OccupancyGrid& grid, Vec2 center, double radius) {
  if (radius < 0.0) throw DomainError("is_free_disc: radius must be non-negative");
  const double res = grid.resolution();
  const Vec2 o = grid.origin();
  const int x0 = static_cast<int>(std::floor((center.x - radius - o.x) / res)) - 1;
  const int x1 = static_cast<int>(std::floor((center.x + radius - o.x) / res)) + 1;
  const int y0 = static_cast<int>(std::floor((center.y - radius - o.y) / res)) - 1;
  const int y1 = static_cast<int>(std::floor((center.y + radius - o.y) / res)) + 1;
  for (int y = std::max(y0, 0); y <= std::min(y1, grid.height() - 1); ++y) {
    for (int x = std::max(x0, 0); x <= std::min(x1, grid.width() - 1); ++x) {
      const CellIndex c{x, y};
      if (!grid.occupied(c)) continue;
      const Vec2 q = closest_point_on_box(center, grid.cell_min(c), grid.cell_max(c));
      if (distance(center, q) <= radius) return false;
    }
  }
  return true;
}

/// Free disc that also lies entirely inside the grid rectangle.
inline bool is_placeable_disc(const OccupancyGrid& grid, Vec2 center, double radius) {
  const Vec2 lo = grid.origin();
  const Vec2 hi = lo + Vec2{grid.width_m(), grid.height_m()};
  if (center.x - radius < lo.x || center.y - radius < lo.y || center.x + radius > hi.x ||
      center.y + radius > hi.y)
    return false;
  return is_free_disc(grid, center, radius);
}

}  // namespace navbench
