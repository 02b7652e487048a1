#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/core/random.hpp"
#include "navbench/world/occupancy_grid.hpp"
#include "navbench/world/queries.hpp"

namespace navbench {

struct LidarSpec {
  int beam_count = 360;
  double fov = 2.0 * std::numbers::pi;
  double max_range = 3.5;
  double noise_sigma = 0.0;  ///< 0 disables noise

  void validate() const {
    if (beam_count < 1) throw DomainError("lidar: beam_count must be >= 1");
    if (!(fov > 0.0) || fov > 2.0 * std::numbers::pi + 1e-12)
      throw DomainError("lidar: fov must lie in (0, 2*pi]");
    if (!(max_range > 0.0)) throw DomainError("lidar: max_range must be positive");
    if (!(noise_sigma >= 0.0)) throw DomainError("lidar: noise_sigma must be >= 0");
  }

  bool full_circle() const { return fov >= 2.0 * std::numbers::pi - 1e-12; }

  /// Beam angle relative to the sensor heading. Beams run counter-clockwise
  /// from -fov/2; a full circle drops the duplicate closing beam.
  double beam_offset(int i) const {
    if (full_circle()) return -std::numbers::pi + i * (2.0 * std::numbers::pi / beam_count);
    if (beam_count == 1) return 0.0;
    return -fov / 2.0 + i * (fov / (beam_count - 1));
  }

  friend bool operator==(const LidarSpec&, const LidarSpec&) = default;
};

struct Scan {
  std::vector<double> ranges;
  double stamp = 0.0;

  double min_range() const {
    double m = std::numeric_limits<double>::infinity();
    for (double r : ranges) m = std::min(m, r);
    return m;
  }
  friend bool operator==(const Scan&, const Scan&) = default;
};

namespace detail {

// Grid-line walk: returns the distance to the entry point of the first
// occupied cell along the ray, or `max_range` if none is met.
inline double march_ray(const OccupancyGrid& grid, Vec2 o, Vec2 dir, double max_range) {
  const double res = grid.resolution();
  CellIndex c = grid.cell_of(o);
  const int step_x = dir.x > 0.0 ? 1 : (dir.x < 0.0 ? -1 : 0);
  const int step_y = dir.y > 0.0 ? 1 : (dir.y < 0.0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double lx = o.x - grid.origin().x;
  const double ly = o.y - grid.origin().y;
  double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
  if (step_x != 0) {
    const double boundary = (c.x + (step_x > 0 ? 1 : 0)) * res;
    t_max_x = (boundary - lx) / dir.x;
    t_delta_x = res / std::abs(dir.x);
  }
  if (step_y != 0) {
    const double boundary = (c.y + (step_y > 0 ? 1 : 0)) * res;
    t_max_y = (boundary - ly) / dir.y;
    t_delta_y = res / std::abs(dir.y);
  }
  for (;;) {
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      c.x += step_x;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      c.y += step_y;
      t_max_y += t_delta_y;
    }
    if (t >= max_range || !grid.in_bounds(c)) return max_range;
    if (grid.occupied(c)) return std::max(t, 0.0);
  }
}

// Distance along a unit ray to the first intersection with a disc; 0 when
// the origin is inside it, infinity on a miss.
inline double ray_disc(Vec2 o, Vec2 dir, const Disc& d) {
  const Vec2 oc = d.center - o;
  const double c2 = dot(oc, oc) - d.radius * d.radius;
  if (c2 <= 0.0) return 0.0;
  const double b = dot(oc, dir);
  if (b <= 0.0) return std::numeric_limits<double>::infinity();
  const double disc = b * b - c2;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  return b - std::sqrt(disc);
}

}  // namespace detail

/// Simulated single-line lidar. Static cells are traversed exactly cell by cell;
/// `discs` adds dynamic circular obstacles. When `noise` is given and
/// `spec.noise_sigma > 0`, Gaussian range noise is added and clamped to
/// [0, max_range]. An origin inside an occupied cell yields all-zero ranges.
inline Scan raycast(const OccupancyGrid& grid, Vec2 origin, double heading, const LidarSpec& spec,
                    std::span<const Disc> discs = {}, Rng* noise = nullptr) {
  spec.validate();
  if (!grid.contains(origin)) throw DomainError("raycast: origin outside grid bounds");
  Scan scan;
  scan.ranges.assign(static_cast<std::size_t>(spec.beam_count), 0.0);
  if (grid.occupied(origin)) return scan;
  for (int i = 0; i < spec.beam_count; ++i) {
    const double a = heading + spec.beam_offset(i);
    const Vec2 dir{std::cos(a), std::sin(a)};
    double r = detail::march_ray(grid, origin, dir, spec.max_range);
    for (const Disc& d : discs) r = std::min(r, detail::ray_disc(origin, dir, d));
    scan.ranges[static_cast<std::size_t>(i)] = r;
  }
  if (noise != nullptr && spec.noise_sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma);
    for (double& r : scan.ranges) r = std::clamp(r + gauss(*noise), 0.0, spec.max_range);
  }
  return scan;
}

/// World-frame endpoints of beams that returned before max range.
inline std::vector<Vec2> scan_endpoints(const Scan& scan, const LidarSpec& spec, const Pose2& pose) {
  std::vector<Vec2> pts;
  pts.reserve(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (!(r < spec.max_range)) continue;
    const double a = pose.theta + spec.beam_offset(static_cast<int>(i));
    pts.push_back({pose.x + r * std::cos(a), pose.y + r * std::sin(a)});
  }
  return pts;
}

}  // namespace navbench
