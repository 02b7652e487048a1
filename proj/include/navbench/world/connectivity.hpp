#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "navbench/core/random.hpp"
#include "navbench/world/occupancy_grid.hpp"
#include "navbench/world/queries.hpp"

namespace navbench {

/// Grid whose occupied cells are those whose center lies strictly closer than
/// `radius` to an occupied cell of `grid` (configuration space of a disc).
inline OccupancyGrid inflate(const OccupancyGrid& grid, double radius) {
  OccupancyGrid out = grid;
  if (radius <= 0.0) return out;
  const int reach = static_cast<int>(std::ceil(radius / grid.resolution())) + 1;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.occupied(CellIndex{x, y})) continue;
      bool interior = true;  // fully enclosed cells never are the nearest obstacle
      for (int dy = -1; dy <= 1 && interior; ++dy)
        for (int dx = -1; dx <= 1 && interior; ++dx) {
          const CellIndex n{x + dx, y + dy};
          if (grid.in_bounds(n) && !grid.occupied(n)) interior = false;
        }
      if (interior) continue;
      const Vec2 lo = grid.cell_min({x, y});
      const Vec2 hi = grid.cell_max({x, y});
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          const CellIndex c{x + dx, y + dy};
          if (!grid.in_bounds(c) || out.occupied(c)) continue;
          const Vec2 center = grid.cell_center(c);
          if (distance(center, closest_point_on_box(center, lo, hi)) < radius)
            out.set_occupied(c);
        }
      }
    }
  }
  return out;
}

/// 4-connected labels of free cells; occupied cells get -1. Labels are
/// assigned in raster order of each component's first cell.
inline std::vector<int> label_free_components(const OccupancyGrid& grid, int* count = nullptr) {
  std::vector<int> label(grid.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (label[i] != -1 || grid.cells()[i] != 0) continue;
    label[i] = next;
    stack.push_back(i);
    while (!stack.empty()) {
      const CellIndex c = grid.unlinear(stack.back());
      stack.pop_back();
      constexpr int dx[4] = {1, -1, 0, 0};
      constexpr int dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const CellIndex n{c.x + dx[k], c.y + dy[k]};
        if (!grid.in_bounds(n)) continue;
        const std::size_t j = grid.linear(n);
        if (label[j] != -1 || grid.cells()[j] != 0) continue;
        label[j] = next;
        stack.push_back(j);
      }
    }
    ++next;
  }
  if (count != nullptr) *count = next;
  return label;
}

/// Cells of the largest 4-connected free component (ties: lowest label).
inline std::vector<CellIndex> largest_free_component(const OccupancyGrid& grid) {
  int n = 0;
  const auto label = label_free_components(grid, &n);
  if (n == 0) return {};
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n), 0);
  for (int l : label)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<CellIndex> cells;
  cells.reserve(sizes[static_cast<std::size_t>(best)]);
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] == best) cells.push_back(grid.unlinear(i));
  return cells;
}

/// Breadth-first reachability between two free cells (4-connected).
inline bool connected(const OccupancyGrid& grid, CellIndex a, CellIndex b) {
  if (!grid.in_bounds(a) || !grid.in_bounds(b) || grid.occupied(a) || grid.occupied(b)) return false;
  std::vector<char> seen(grid.size(), 0);
  std::queue<CellIndex> q;
  q.push(a);
  seen[grid.linear(a)] = 1;
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop();
    if (c == b) return true;
    constexpr int dx[4] = {1, -1, 0, 0};
    constexpr int dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const CellIndex n{c.x + dx[k], c.y + dy[k]};
      if (!grid.in_bounds(n) || grid.occupied(n) || seen[grid.linear(n)]) continue;
      seen[grid.linear(n)] = 1;
      q.push(n);
    }
  }
  return false;
}

/// Uniform sampler over the largest connected region in which a disc of the
/// given radius fits. Used for spawning agents and robot start/goal.
class FreeRegion {
 public:
  FreeRegion() = default;
  FreeRegion(const OccupancyGrid& grid, double radius) : grid_(&grid), radius_(radius) {
    cells_ = largest_free_component(inflate(grid, radius));
    const auto& g = grid;
    std::erase_if(cells_, [&](CellIndex c) { return !is_placeable_disc(g, g.cell_center(c), radius); });
  }

  bool empty() const { return cells_.empty(); }
  std::size_t size() const { return cells_.size(); }
  double radius() const { return radius_; }
  const std::vector<CellIndex>& cells() const { return cells_; }

  /// Uniform point inside a uniformly chosen region cell; the caller still
  /// checks the exact disc test.
  Vec2 sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, cells_.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const CellIndex c = cells_[pick(rng)];
    const Vec2 lo = grid_->cell_min(c);
    return {lo.x + unit(rng) * grid_->resolution(), lo.y + unit(rng) * grid_->resolution()};
  }

  bool contains(Vec2 p) const {
    const CellIndex c = grid_->cell_of(p);
    return std::binary_search(cells_.begin(), cells_.end(), c, [](CellIndex a, CellIndex b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
  }

 private:
  const OccupancyGrid* grid_ = nullptr;
  double radius_ = 0.0;
  std::vector<CellIndex> cells_;  // raster order (y, then x)
};

}  // namespace navbench
