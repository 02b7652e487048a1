#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/robot/kinematics.hpp"
#include "navbench/world/lidar.hpp"

namespace navbench {

struct DwaConfig {
  int n_v = 20;
  int n_omega = 40;
  int n_vy = 5;  ///< lateral samples, holonomic bases only
  double horizon = 1.5;
  double dt_sim = 0.1;
  double w_heading = 2.0;
  double w_clearance = 0.5;
  double w_velocity = 0.3;
  double command_period = 0.1;
  double clearance_cap = 1.0;  ///< surface clearance beyond this scores as this
  double min_clearance = 0.01;  ///< floor before taking 1/clearance

  void validate() const {
    if (n_v < 2 || n_omega < 2 || n_vy < 1) throw DomainError("dwa: sample counts must be >= 2");
    if (!(horizon > 0.0) || !(dt_sim > 0.0) || !(command_period > 0.0))
      throw DomainError("dwa: horizon, dt_sim and command_period must be positive");
    if (w_heading < 0.0 || w_clearance < 0.0 || w_velocity < 0.0 ||
        w_heading + w_clearance + w_velocity <= 0.0)
      throw DomainError("dwa: weights must be >= 0 and not all zero");
    if (!(clearance_cap > 0.0) || !(min_clearance > 0.0))
      throw DomainError("dwa: clearance cap and floor must be positive");
  }
};

/// Bucketed point set for bounded nearest-distance queries.
class PointIndex {
 public:
  explicit PointIndex(std::vector<Vec2> points, double bucket = 0.5)
      : points_(std::move(points)), bucket_(bucket) {
    if (points_.empty()) return;
    lo_ = hi_ = points_.front();
    for (const Vec2& p : points_) {
      lo_.x = std::min(lo_.x, p.x), lo_.y = std::min(lo_.y, p.y);
      hi_.x = std::max(hi_.x, p.x), hi_.y = std::max(hi_.y, p.y);
    }
    nx_ = static_cast<int>((hi_.x - lo_.x) / bucket_) + 1;
    ny_ = static_cast<int>((hi_.y - lo_.y) / bucket_) + 1;
    offsets_.assign(static_cast<std::size_t>(nx_ * ny_) + 1, 0);
    for (const Vec2& p : points_) ++offsets_[key(p) + 1];
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    order_.resize(points_.size());
    auto fill = offsets_;
    for (std::size_t i = 0; i < points_.size(); ++i) order_[fill[key(points_[i])]++] = i;
  }

  bool empty() const { return points_.empty(); }
  std::span<const Vec2> points() const { return points_; }

  /// min(radius, distance to the nearest point).
  double nearest(Vec2 p, double radius) const {
    double best2 = radius * radius;
    if (points_.empty()) return radius;
    const int x0 = std::max(0, static_cast<int>(std::floor((p.x - radius - lo_.x) / bucket_)));
    const int x1 = std::min(nx_ - 1, static_cast<int>(std::floor((p.x + radius - lo_.x) / bucket_)));
    const int y0 = std::max(0, static_cast<int>(std::floor((p.y - radius - lo_.y) / bucket_)));
    const int y1 = std::min(ny_ - 1, static_cast<int>(std::floor((p.y + radius - lo_.y) / bucket_)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const auto b = static_cast<std::size_t>(y * nx_ + x);
        for (std::size_t k = offsets_[b]; k < offsets_[b + 1]; ++k) {
          const Vec2 d = points_[order_[k]] - p;
          best2 = std::min(best2, d.x * d.x + d.y * d.y);
        }
      }
    return std::sqrt(best2);
  }

 private:
  std::size_t key(Vec2 p) const {
    const int x = std::min(nx_ - 1, static_cast<int>((p.x - lo_.x) / bucket_));
    const int y = std::min(ny_ - 1, static_cast<int>((p.y - lo_.y) / bucket_));
    return static_cast<std::size_t>(y * nx_ + x);
  }

  std::vector<Vec2> points_;
  double bucket_;
  Vec2 lo_, hi_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> order_;
};

/// Velocities reachable within one command period, intersected with the bounds.
struct DynamicWindow {
  Interval vx, vy, omega;
};

inline DynamicWindow dynamic_window(const RobotState& s, const RobotSpec& spec, const DwaConfig& cfg) {
  const double dv = spec.accel.lin * cfg.command_period;
  const double dw = spec.accel.ang * cfg.command_period;
  auto cut = [](Interval reach, Interval bound) {
    Interval out{std::max(reach.min, bound.min), std::min(reach.max, bound.max)};
    if (out.min > out.max) {  // current velocity outside bounds: nearest bound edge
      const double v = reach.max < bound.min ? bound.min : bound.max;
      out = {v, v};
    }
    return out;
  };
  DynamicWindow w;
  w.vx = cut({s.velocity.vx - dv, s.velocity.vx + dv}, spec.bounds.vlin_x);
  w.vy = spec.holonomic() ? cut({s.velocity.vy - dv, s.velocity.vy + dv}, spec.bounds.vlin_y)
                          : Interval{0.0, 0.0};
  w.omega = cut({s.velocity.omega - dw, s.velocity.omega + dw}, spec.bounds.vang);
  return w;
}

namespace detail {

inline std::vector<double> lattice(Interval iv, int n, bool include_zero) {
  std::vector<double> out;
  if (iv.width() <= 0.0) return {iv.min};
  for (int i = 0; i + 1 < n; ++i) out.push_back(iv.min + iv.width() * i / (n - 1));
  out.push_back(iv.max);
  if (include_zero && iv.contains(0.0) && std::find(out.begin(), out.end(), 0.0) == out.end())
    out.insert(std::upper_bound(out.begin(), out.end(), 0.0), 0.0);
  return out;
}

}  // namespace detail

/// Sample lattice in evaluation order: vx outer, vy middle, omega inner.
/// Omega always includes 0 when it lies in the window.
inline std::vector<VelocityCommand> dwa_samples(const RobotState& s, const RobotSpec& spec,
                                                const DwaConfig& cfg) {
  const auto w = dynamic_window(s, spec, cfg);
  const auto vxs = detail::lattice(w.vx, cfg.n_v, false);
  const auto vys = spec.holonomic() ? detail::lattice(w.vy, cfg.n_vy, true) : std::vector<double>{0.0};
  const auto oms = detail::lattice(w.omega, cfg.n_omega, true);
  std::vector<VelocityCommand> out;
  out.reserve(vxs.size() * vys.size() * oms.size());
  for (double vx : vxs)
    for (double vy : vys)
      for (double om : oms) out.push_back({vx, vy, om});
  return out;
}

struct DwaCandidate {
  VelocityCommand cmd;
  bool admissible = false;
  double heading_error = 0.0;
  double clearance = 0.0;  ///< surface clearance over the horizon, floored and capped
  double speed_term = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

/// Time for the robot to brake to rest from the speed of `cmd`.
inline double braking_time(const VelocityCommand& cmd, const RobotSpec& spec) {
  return std::hypot(cmd.vx, cmd.vy) / spec.accel.lin;
}

/// Number of forward-simulation steps that must be collision-free for `cmd`
/// to be admissible: every step that starts before the braking time.
inline int braking_steps(const VelocityCommand& cmd, const RobotSpec& spec, const DwaConfig& cfg) {
  const double tb = braking_time(cmd, spec);
  return tb <= 0.0 ? 0 : static_cast<int>(std::ceil(tb / cfg.dt_sim - 1e-12));
}

inline double dwa_speed_term(const VelocityCommand& cmd, const RobotSpec& spec) {
  return spec.bounds.vlin_x.max - cmd.vx;
}

/// Scores every window sample against the scan-derived point obstacles.
inline std::vector<DwaCandidate> dwa_evaluate(const RobotState& state, const Scan& scan, Vec2 subgoal,
                                              const RobotSpec& spec, const DwaConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(scan.ranges.size()) != spec.lidar.beam_count)
    throw DomainError("dwa: scan length does not match the robot lidar");
  const PointIndex obstacles(scan_endpoints(scan, spec.lidar, state.pose));
  const double search = spec.radius + cfg.clearance_cap;
  const int horizon_steps = static_cast<int>(std::ceil(cfg.horizon / cfg.dt_sim - 1e-12));

  std::vector<DwaCandidate> out;
  for (const auto& cmd : dwa_samples(state, spec, cfg)) {
    DwaCandidate c;
    c.cmd = cmd;
    const int brake = braking_steps(cmd, spec, cfg);
    const int steps = std::max(horizon_steps, brake);
    double min_center = search;
    bool collides = false;
    Pose2 end = state.pose;
    for (int k = 1; k <= steps; ++k) {
      const Pose2 p = integrate_pose(state.pose, cmd, k * cfg.dt_sim);
      const double d = obstacles.nearest(p.position(), search);
      if (k <= brake && d < spec.radius) {
        collides = true;
        break;
      }
      if (k <= horizon_steps) {
        min_center = std::min(min_center, d);
        end = p;
      }
    }
    if (collides) {
      out.push_back(c);
      continue;
    }
    c.admissible = true;
    const Vec2 to_goal = subgoal - end.position();
    c.heading_error = std::abs(normalize_angle(std::atan2(to_goal.y, to_goal.x) - end.theta));
    c.clearance = std::clamp(min_center - spec.radius, cfg.min_clearance, cfg.clearance_cap);
    c.speed_term = dwa_speed_term(cmd, spec);
    c.score = cfg.w_heading * c.heading_error + cfg.w_clearance / c.clearance +
              cfg.w_velocity * c.speed_term;
    out.push_back(c);
  }
  return out;
}

/// Command used when no sample is admissible: turn in place toward the subgoal
/// at the maximum angular rate.
inline VelocityCommand dwa_fallback(const RobotState& state, Vec2 subgoal, const RobotSpec& spec) {
  const Vec2 d = subgoal - state.pose.position();
  const double bearing = normalize_angle(std::atan2(d.y, d.x) - state.pose.theta);
  return {0.0, 0.0, bearing >= 0.0 ? spec.bounds.vang.max : spec.bounds.vang.min};
}

/// Argmin of the score; ties go to smaller |omega|, then to the earlier sample.
inline std::optional<std::size_t> dwa_select(std::span<const DwaCandidate> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.admissible) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (c.score < b.score || (c.score == b.score && std::abs(c.cmd.omega) < std::abs(b.cmd.omega)))
      best = i;
  }
  return best;
}

/// Dynamic window approach: one velocity command toward `subgoal`.
inline VelocityCommand dwa_plan(const RobotState& state, const Scan& scan, Vec2 subgoal,
                                const RobotSpec& spec, const DwaConfig& cfg = {}) {
  const auto candidates = dwa_evaluate(state, scan, subgoal, spec, cfg);
  const auto best = dwa_select(candidates);
  return best ? candidates[*best].cmd : dwa_fallback(state, subgoal, spec);
}

}  // namespace navbench
