#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "navbench/core/geometry.hpp"
#include "navbench/metrics/record.hpp"

namespace navbench {

/// Contact steps closer together than this (in seconds) count as one collision.
inline constexpr double kCollisionMergeWindow = 0.5;
/// Below this many samples an episode has no meaningful derivatives.
inline constexpr std::size_t kMinSamplesForMetrics = 4;
/// Holonomic heading falls back to the previous value below this speed (m/s).
inline constexpr double kHeadingSpeedThreshold = 0.01;

struct CollisionInterval {
  double start = 0.0;  ///< stamp of the first contact step
  double end = 0.0;    ///< stamp of the last contact step
  friend bool operator==(const CollisionInterval&, const CollisionInterval&) = default;
};

/// A step is in contact when its shortest lidar range is below the robot radius.
/// Contact runs whose gap (last contact to next contact) is under the merge
/// window are fused into one collision.
inline std::vector<CollisionInterval> detect_collisions(std::span<const Sample> samples, double robot_radius) {
  std::vector<CollisionInterval> out;
  for (const auto& s : samples) {
    if (!(s.min_scan < robot_radius)) continue;
    if (!out.empty() && s.stamp - out.back().end < kCollisionMergeWindow) {
      out.back().end = s.stamp;
    } else {
      out.push_back({s.stamp, s.stamp});
    }
  }
  return out;
}

inline std::vector<Event> collision_events(std::span<const CollisionInterval> intervals) {
  std::vector<Event> out;
  for (const auto& c : intervals) {
    out.push_back({c.start, event::collision_start, {}});
    out.push_back({c.end, event::collision_end, {}});
  }
  return out;
}

struct Spread {
  double avg = 0.0;
  double max = 0.0;
  double min = 0.0;
  double normalized = 0.0;
  friend bool operator==(const Spread&, const Spread&) = default;
};

/// Grouping key for aggregation.
struct GroupKey {
  std::string planner;
  std::string robot;
  std::string map;
  int obstacle_count = 0;
  auto tie() const { return std::tie(planner, robot, map, obstacle_count); }
  friend bool operator==(const GroupKey& a, const GroupKey& b) { return a.tie() == b.tie(); }
  friend bool operator<(const GroupKey& a, const GroupKey& b) { return a.tie() < b.tie(); }
};

/// Per-episode navigation metrics. The optional fields are absent for
/// degenerate episodes (too few samples); time_to_goal is absent unless the
/// goal was reached.
struct MetricsReport {
  GroupKey key;
  std::string episode_id;
  EpisodeStatus status = EpisodeStatus::incomplete;
  bool degenerate = false;
  bool success = false;
  bool goal_reached = false;
  int collisions = 0;
  std::optional<double> time_to_goal;
  std::optional<double> path_length;
  std::optional<double> velocity_avg;
  std::optional<double> acceleration_avg;
  std::optional<double> jerk_avg;
  std::optional<Spread> curvature;
  std::optional<double> angle_over_length;
  std::optional<double> roughness;
  std::optional<Spread> clearing;
};

// --- trajectory geometry -------------------------------------------------------

/// Twice the signed triangle area, with exact zero for collinear points up to a
/// relative tolerance.
inline double twice_area(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 u = b - a, v = c - a;
  const double cr = cross(u, v);
  const double scale = std::abs(u.x * v.y) + std::abs(u.y * v.x);
  return std::abs(cr) <= 1e-12 * scale ? 0.0 : std::abs(cr);
}

/// Menger curvature 4·area/(|ab|·|bc|·|ca|) in 1/m; nullopt when two points coincide.
inline std::optional<double> menger_curvature(Vec2 a, Vec2 b, Vec2 c) {
  const double ab = distance(a, b), bc = distance(b, c), ca = distance(c, a);
  if (ab == 0.0 || bc == 0.0 || ca == 0.0) return std::nullopt;
  return 2.0 * twice_area(a, b, c) / (ab * bc * ca);
}

/// Deviation of the middle point relative to the chord: 2·area/|ac|²; nullopt when a = c.
inline std::optional<double> triangle_roughness(Vec2 a, Vec2 b, Vec2 c) {
  const double base = distance(a, c);
  if (base == 0.0) return std::nullopt;
  return twice_area(a, b, c) / (base * base);
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Computes every metric of one episode. Collisions are re-derived from the
/// samples so records from any source are scored the same way.
inline MetricsReport evaluate(const EpisodeRecord& r) {
  MetricsReport m;
  m.key = {r.meta.planner, r.meta.robot, r.meta.map, r.meta.obstacle_count};
  m.episode_id = r.meta.episode_id;
  m.status = r.status();
  m.collisions = static_cast<int>(detect_collisions(r.samples, r.meta.robot_radius).size());
  const Event* goal = r.find_event(event::goal_reached);
  m.goal_reached = goal != nullptr && m.status == EpisodeStatus::goal_reached;
  m.success = m.goal_reached && m.collisions < 2;
  if (m.goal_reached && !r.samples.empty()) m.time_to_goal = goal->stamp - r.samples.front().stamp;

  const std::size_t n = r.samples.size();
  if (n < kMinSamplesForMetrics) {
    m.degenerate = true;
    return m;
  }
  const double dt = r.meta.dt;
  std::vector<Vec2> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = r.samples[i].pose.position();

  double length = 0.0;
  std::vector<Vec2> vel(n - 1);
  std::vector<double> speed(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec2 d = p[i + 1] - p[i];
    length += norm(d);
    vel[i] = d / dt;
    speed[i] = norm(vel[i]);
  }
  std::vector<Vec2> acc(n - 2);
  std::vector<double> acc_mag(n - 2);
  for (std::size_t i = 0; i + 1 < vel.size(); ++i) {
    acc[i] = (vel[i + 1] - vel[i]) / dt;
    acc_mag[i] = norm(acc[i]);
  }
  std::vector<double> jerk_mag(n - 3);
  for (std::size_t i = 0; i + 1 < acc.size(); ++i) jerk_mag[i] = norm((acc[i + 1] - acc[i]) / dt);

  m.path_length = length;
  m.velocity_avg = detail::mean_of(speed);
  m.acceleration_avg = detail::mean_of(acc_mag);
  m.jerk_avg = detail::mean_of(jerk_mag);

  Spread curv;
  std::vector<double> kappas, rough;
  double weighted = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (auto k = menger_curvature(p[i - 1], p[i], p[i + 1])) {
      kappas.push_back(*k);
      weighted += *k * 0.5 * (distance(p[i - 1], p[i]) + distance(p[i], p[i + 1]));
    }
    if (auto q = triangle_roughness(p[i - 1], p[i], p[i + 1])) rough.push_back(*q);
  }
  if (!kappas.empty()) {
    curv.avg = detail::mean_of(kappas);
    curv.max = *std::max_element(kappas.begin(), kappas.end());
    curv.min = *std::min_element(kappas.begin(), kappas.end());
    curv.normalized = length > 0.0 ? weighted / length : 0.0;
  }
  m.curvature = curv;
  m.roughness = detail::mean_of(rough);

  // Heading: recorded orientation, or direction of travel for holonomic bases.
  std::vector<double> heading(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = r.samples[i];
    heading[i] = s.pose.theta;
    if (r.meta.holonomic) {
      const Vec2 body{s.velocity.vx, s.velocity.vy};
      if (norm(body) > kHeadingSpeedThreshold) {
        const Vec2 w = rotate(body, s.pose.theta);
        heading[i] = std::atan2(w.y, w.x);
      } else if (i > 0) {
        heading[i] = heading[i - 1];
      }
    }
  }
  double turned = 0.0;
  for (std::size_t i = 1; i < n; ++i) turned += std::abs(normalize_angle(heading[i] - heading[i - 1]));
  m.angle_over_length = length > 0.0 ? turned / length : 0.0;

  Spread clear;
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = r.samples[i].clearance;
  clear.avg = detail::mean_of(c);
  clear.max = *std::max_element(c.begin(), c.end());
  clear.min = *std::min_element(c.begin(), c.end());
  clear.normalized = clear.avg / r.meta.lidar_max_range;
  m.clearing = clear;
  return m;
}

// --- report serialization -------------------------------------------------------

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json spread_json(const std::optional<Spread>& s) {
  if (!s) return nullptr;
  return {{"avg", s->avg}, {"max", s->max}, {"min", s->min}, {"normalized", s->normalized}};
}

}  // namespace detail

inline nlohmann::json to_json(const MetricsReport& m) {
  return {{"episode_id", m.episode_id},
          {"planner", m.key.planner},
          {"robot", m.key.robot},
          {"map", m.key.map},
          {"obstacle_count", m.key.obstacle_count},
          {"status", to_string(m.status)},
          {"degenerate", m.degenerate},
          {"success", m.success},
          {"collisions", m.collisions},
          {"time_to_goal", detail::opt_json(m.time_to_goal)},
          {"path_length", detail::opt_json(m.path_length)},
          {"velocity_avg", detail::opt_json(m.velocity_avg)},
          {"acceleration_avg", detail::opt_json(m.acceleration_avg)},
          {"jerk_avg", detail::opt_json(m.jerk_avg)},
          {"curvature", detail::spread_json(m.curvature)},
          {"angle_over_length", detail::opt_json(m.angle_over_length)},
          {"roughness", detail::opt_json(m.roughness)},
          {"clearing_distance", detail::spread_json(m.clearing)}};
}

// --- aggregation -----------------------------------------------------------------

struct MetricColumn {
  const char* name;
  std::function<std::optional<double>(const MetricsReport&)> get;
};

/// Aggregated metrics in CSV column order.
inline const std::vector<MetricColumn>& metric_columns() {
  static const std::vector<MetricColumn> cols = {
      {"collisions", [](const MetricsReport& m) { return std::optional<double>(m.collisions); }},
      {"time_to_goal", [](const MetricsReport& m) { return m.time_to_goal; }},
      {"path_length", [](const MetricsReport& m) { return m.path_length; }},
      {"velocity_avg", [](const MetricsReport& m) { return m.velocity_avg; }},
      {"acceleration_avg", [](const MetricsReport& m) { return m.acceleration_avg; }},
      {"jerk_avg", [](const MetricsReport& m) { return m.jerk_avg; }},
      {"curvature_avg", [](const MetricsReport& m) { return m.curvature ? std::optional(m.curvature->avg) : std::nullopt; }},
      {"curvature_max", [](const MetricsReport& m) { return m.curvature ? std::optional(m.curvature->max) : std::nullopt; }},
      {"curvature_min", [](const MetricsReport& m) { return m.curvature ? std::optional(m.curvature->min) : std::nullopt; }},
      {"curvature_normalized",
       [](const MetricsReport& m) { return m.curvature ? std::optional(m.curvature->normalized) : std::nullopt; }},
      {"angle_over_length", [](const MetricsReport& m) { return m.angle_over_length; }},
      {"roughness", [](const MetricsReport& m) { return m.roughness; }},
      {"clearing_avg", [](const MetricsReport& m) { return m.clearing ? std::optional(m.clearing->avg) : std::nullopt; }},
      {"clearing_max", [](const MetricsReport& m) { return m.clearing ? std::optional(m.clearing->max) : std::nullopt; }},
      {"clearing_min", [](const MetricsReport& m) { return m.clearing ? std::optional(m.clearing->min) : std::nullopt; }},
      {"clearing_normalized",
       [](const MetricsReport& m) { return m.clearing ? std::optional(m.clearing->normalized) : std::nullopt; }},
  };
  return cols;
}

struct MetricSummary {
  std::size_t count = 0;  ///< episodes where the metric is present
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
  double min = 0.0;
  double max = 0.0;
};

struct GroupSummary {
  GroupKey key;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  std::size_t timeouts = 0;
  std::size_t planner_errors = 0;
  double success_rate = 0.0;  ///< percent
  std::vector<MetricSummary> metrics;  ///< parallel to metric_columns()
};

inline MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = detail::mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

/// One row per (planner, robot, map, obstacle_count), in key order.
inline std::vector<GroupSummary> aggregate(std::span<const MetricsReport> reports) {
  std::map<GroupKey, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) groups[r.key].push_back(&r);
  std::vector<GroupSummary> out;
  for (const auto& [key, members] : groups) {
    GroupSummary g;
    g.key = key;
    g.episodes = members.size();
    for (const auto* r : members) {
      g.successes += r->success ? 1 : 0;
      g.timeouts += r->status == EpisodeStatus::timeout ? 1 : 0;
      g.planner_errors += r->status == EpisodeStatus::planner_error ? 1 : 0;
    }
    g.success_rate = 100.0 * static_cast<double>(g.successes) / static_cast<double>(g.episodes);
    for (const auto& col : metric_columns()) {
      std::vector<double> values;
      for (const auto* r : members)
        if (auto v = col.get(*r)) values.push_back(*v);
      g.metrics.push_back(summarize(values));
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline std::string csv_header() {
  std::string h = "planner,robot,map,obstacle_count,episodes,success_rate,timeouts,planner_errors";
  for (const auto& col : metric_columns())
    for (const char* stat : {"mean", "std", "min", "max"}) h += std::string(",") + col.name + "_" + stat;
  return h;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

inline std::string fmt_double(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

}  // namespace detail

/// Canonical summary table. Metrics absent from every episode of a group are empty cells.
inline std::string to_csv(std::span<const GroupSummary> groups) {
  std::string out = csv_header() + "\n";
  for (const auto& g : groups) {
    out += detail::csv_field(g.key.planner) + "," + detail::csv_field(g.key.robot) + "," +
           detail::csv_field(g.key.map) + "," + std::to_string(g.key.obstacle_count) + "," +
           std::to_string(g.episodes) + "," + detail::fmt_double(g.success_rate) + "," +
           std::to_string(g.timeouts) + "," + std::to_string(g.planner_errors);
    for (const auto& s : g.metrics) {
      if (s.count == 0) {
        out += ",,,,";
        continue;
      }
      for (double v : {s.mean, s.std, s.min, s.max}) out += "," + detail::fmt_double(v);
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::json to_json(const GroupSummary& g) {
  nlohmann::json metrics = nlohmann::json::object();
  const auto& cols = metric_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto& s = g.metrics[i];
    if (s.count == 0) {
      metrics[cols[i].name] = nullptr;
      continue;
    }
    metrics[cols[i].name] = {{"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
  }
  return {{"planner", g.key.planner},
          {"robot", g.key.robot},
          {"map", g.key.map},
          {"obstacle_count", g.key.obstacle_count},
          {"episodes", g.episodes},
          {"successes", g.successes},
          {"success_rate", g.success_rate},
          {"timeouts", g.timeouts},
          {"planner_errors", g.planner_errors},
          {"metrics", metrics}};
}

}  // namespace navbench
