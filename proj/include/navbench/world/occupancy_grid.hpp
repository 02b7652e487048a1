#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"

namespace navbench {

struct CellIndex {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(CellIndex, CellIndex) = default;
};

/// Binary occupancy raster. Cell (0, 0) spans [origin, origin + resolution)
/// on both axes; x grows with column index, y with row index.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;

  OccupancyGrid(int width, int height, double resolution, Vec2 origin = {})
      : width_(width), height_(height), resolution_(resolution), origin_(origin) {
    if (width < 1 || height < 1)
      throw DomainError("occupancy grid needs at least one cell per axis");
    if (!(resolution > 0.0) || !std::isfinite(resolution))
      throw DomainError("occupancy grid resolution must be positive");
    cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  double width_m() const { return width_ * resolution_; }
  double height_m() const { return height_ * resolution_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(CellIndex c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }

  /// True when `p` lies in the half-open world rectangle covered by the grid.
  bool contains(Vec2 p) const {
    const double lx = p.x - origin_.x;
    const double ly = p.y - origin_.y;
    return lx >= 0.0 && ly >= 0.0 && lx < width_m() && ly < height_m();
  }

  CellIndex cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }

  Vec2 cell_center(CellIndex c) const {
    return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
  }
  Vec2 cell_min(CellIndex c) const {
    return {origin_.x + c.x * resolution_, origin_.y + c.y * resolution_};
  }
  Vec2 cell_max(CellIndex c) const {
    return {origin_.x + (c.x + 1) * resolution_, origin_.y + (c.y + 1) * resolution_};
  }

  std::size_t linear(CellIndex c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }
  CellIndex unlinear(std::size_t i) const {
    return {static_cast<int>(i % static_cast<std::size_t>(width_)),
            static_cast<int>(i / static_cast<std::size_t>(width_))};
  }

  /// Out-of-bounds cells read as free.
  bool occupied(CellIndex c) const { return in_bounds(c) && cells_[linear(c)] != 0; }
  bool occupied(Vec2 p) const { return occupied(cell_of(p)); }

  void set_occupied(CellIndex c, bool value = true) {
    if (!in_bounds(c)) throw DomainError("cell index out of grid bounds");
    cells_[linear(c)] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> cells() const { return cells_; }

  std::size_t occupied_count() const {
    std::size_t n = 0;
    for (auto v : cells_) n += v != 0;
    return n;
  }
  std::size_t free_count() const { return cells_.size() - occupied_count(); }
  double free_fraction() const {
    return static_cast<double>(free_count()) / static_cast<double>(cells_.size());
  }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_{};
  std::vector<std::uint8_t> cells_;
};

}  // namespace navbench
