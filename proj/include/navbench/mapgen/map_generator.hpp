#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "navbench/core/error.hpp"
#include "navbench/core/random.hpp"
#include "navbench/robot/kinematics.hpp"
#include "navbench/world/connectivity.hpp"
#include "navbench/world/occupancy_grid.hpp"

namespace navbench {

enum class MapKind { indoor, outdoor };

inline const char* to_string(MapKind k) { return k == MapKind::indoor ? "indoor" : "outdoor"; }

inline MapKind map_kind_from_string(const std::string& s) {
  if (s == "indoor") return MapKind::indoor;
  if (s == "outdoor") return MapKind::outdoor;
  throw ParseError("unknown map kind '" + s + "'");
}

/// Difficulty knobs of one curriculum stage.
struct StageParams {
  double corridor_width = 3.0;   ///< indoor passage and door width, m
  int obstacle_count = 6;        ///< outdoor
  Interval obstacle_radius{0.3, 0.6};  ///< outdoor, m
  friend bool operator==(const StageParams&, const StageParams&) = default;
};

inline std::vector<StageParams> default_stages() {
  return {{3.0, 6, {0.3, 0.6}}, {2.0, 10, {0.3, 0.9}}, {1.2, 16, {0.4, 1.2}}};
}

struct MapGenConfig {
  MapKind kind = MapKind::outdoor;
  double width = 15.0;   ///< m
  double height = 15.0;  ///< m
  double resolution = 0.05;
  int stage = 1;
  std::uint64_t seed = 0;
  double wall_thickness = 0.15;  ///< m, border and maze walls
  std::vector<StageParams> stages = default_stages();
  /// Stage-1 corridors must fit two of the widest robot side by side.
  double max_robot_diameter = 2.0 * jackal().radius;

  const StageParams& params() const { return stages.at(static_cast<std::size_t>(stage - 1)); }

  void validate() const {
    if (!(resolution > 0.0)) throw GenerationError("mapgen: resolution must be positive");
    if (!(width > 0.0) || !(height > 0.0)) throw GenerationError("mapgen: size must be positive");
    if (!(wall_thickness > 0.0)) throw GenerationError("mapgen: wall_thickness must be positive");
    if (stages.empty()) throw GenerationError("mapgen: stage table is empty");
    if (stage < 1 || stage > static_cast<int>(stages.size()))
      throw GenerationError("mapgen: stage " + std::to_string(stage) + " outside 1.." +
                            std::to_string(stages.size()));
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const auto& s = stages[i];
      if (!(s.corridor_width > 0.0) || s.obstacle_count < 0 || !(s.obstacle_radius.min > 0.0) ||
          s.obstacle_radius.min > s.obstacle_radius.max)
        throw GenerationError("mapgen: invalid parameters for stage " + std::to_string(i + 1));
      if (i == 0) continue;
      const auto& p = stages[i - 1];
      if (!(s.corridor_width < p.corridor_width))
        throw GenerationError("mapgen: corridor width must strictly decrease with stage");
      if (s.obstacle_count < p.obstacle_count || s.obstacle_radius.min < p.obstacle_radius.min ||
          s.obstacle_radius.max < p.obstacle_radius.max)
        throw GenerationError("mapgen: obstacle count and size must not decrease with stage");
    }
    if (stages.front().corridor_width < 2.0 * max_robot_diameter)
      throw GenerationError("mapgen: stage-1 corridor narrower than two robot diameters");
  }
};

struct FreeSpaceReport {
  std::size_t free_cells = 0;
  std::size_t largest_component_cells = 0;
  int components = 0;
  int obstacles = 0;  ///< outdoor shapes placed or indoor walls drawn
  double free_fraction = 0.0;
  double largest_component_fraction = 0.0;  ///< of free cells
};

struct GeneratedMap {
  OccupancyGrid grid;
  FreeSpaceReport report;
};

inline constexpr int kMaxRejectionsPerObstacle = 50;
inline constexpr double kMinLargestComponentFraction = 0.6;

inline FreeSpaceReport free_space_report(const OccupancyGrid& grid, int obstacles = 0) {
  FreeSpaceReport r;
  int n = 0;
  const auto labels = label_free_components(grid, &n);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n), 0);
  for (int l : labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)], ++r.free_cells;
  r.components = n;
  r.largest_component_cells = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  r.obstacles = obstacles;
  r.free_fraction = static_cast<double>(r.free_cells) / static_cast<double>(grid.size());
  r.largest_component_fraction =
      r.free_cells == 0 ? 0.0
                        : static_cast<double>(r.largest_component_cells) / static_cast<double>(r.free_cells);
  return r;
}

namespace detail {

inline void fill_cells(OccupancyGrid& g, int x0, int y0, int x1, int y1) {
  for (int y = std::max(y0, 0); y < std::min(y1, g.height()); ++y)
    for (int x = std::max(x0, 0); x < std::min(x1, g.width()); ++x) g.set_occupied({x, y});
}

inline void clear_cells(OccupancyGrid& g, int x0, int y0, int x1, int y1) {
  for (int y = std::max(y0, 0); y < std::min(y1, g.height()); ++y)
    for (int x = std::max(x0, 0); x < std::min(x1, g.width()); ++x) g.set_occupied({x, y}, false);
}

inline void draw_border(OccupancyGrid& g, int t) {
  fill_cells(g, 0, 0, g.width(), t);
  fill_cells(g, 0, g.height() - t, g.width(), g.height());
  fill_cells(g, 0, 0, t, g.height());
  fill_cells(g, g.width() - t, 0, g.width(), g.height());
}

// Splits `n_cells` free cells into chambers of at least `min_cells` separated
// by walls of `wall` cells. Returns [begin, end) cell spans of each chamber.
inline std::vector<std::pair<int, int>> chamber_spans(int begin, int n_cells, int min_cells, int wall) {
  const int count = (n_cells + wall) / (min_cells + wall);
  if (count < 1) return {};
  const int chamber_total = n_cells - (count - 1) * wall;
  std::vector<std::pair<int, int>> spans;
  int pos = begin;
  for (int i = 0; i < count; ++i) {
    const int w = chamber_total / count + (i < chamber_total % count ? 1 : 0);
    spans.emplace_back(pos, pos + w);
    pos += w + wall;
  }
  return spans;
}

struct Maze {
  OccupancyGrid& grid;
  const std::vector<std::pair<int, int>>& xs;
  const std::vector<std::pair<int, int>>& ys;
  int door_cells;
  Rng& rng;
  int walls = 0;

  int pick(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }

  // Region in chamber units: [cx0, cx1) x [cy0, cy1).
  void divide(int cx0, int cx1, int cy0, int cy1) {
    const int w = cx1 - cx0, h = cy1 - cy0;
    if (w < 2 && h < 2) return;
    bool horizontal;
    if (w < 2) horizontal = true;
    else if (h < 2) horizontal = false;
    else if (w != h) horizontal = w < h;
    else horizontal = pick(0, 1) == 0;

    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    if (horizontal) {
      const int k = pick(cy0, cy1 - 2);  // wall between chamber rows k and k+1
      const int y0 = ys[static_cast<std::size_t>(k)].second, y1 = ys[static_cast<std::size_t>(k + 1)].first;
      const int x0 = cx0 == 0 ? 0 : xs[static_cast<std::size_t>(cx0 - 1)].second;
      const int x1 = cx1 == nx ? grid.width() : xs[static_cast<std::size_t>(cx1)].first;
      fill_cells(grid, x0, y0, x1, y1);
      const auto& door = xs[static_cast<std::size_t>(pick(cx0, cx1 - 1))];
      const int off = pick(0, door.second - door.first - door_cells);
      clear_cells(grid, door.first + off, y0, door.first + off + door_cells, y1);
      ++walls;
      divide(cx0, cx1, cy0, k + 1);
      divide(cx0, cx1, k + 1, cy1);
    } else {
      const int k = pick(cx0, cx1 - 2);
      const int x0 = xs[static_cast<std::size_t>(k)].second, x1 = xs[static_cast<std::size_t>(k + 1)].first;
      const int y0 = cy0 == 0 ? 0 : ys[static_cast<std::size_t>(cy0 - 1)].second;
      const int y1 = cy1 == ny ? grid.height() : ys[static_cast<std::size_t>(cy1)].first;
      fill_cells(grid, x0, y0, x1, y1);
      const auto& door = ys[static_cast<std::size_t>(pick(cy0, cy1 - 1))];
      const int off = pick(0, door.second - door.first - door_cells);
      clear_cells(grid, x0, door.first + off, x1, door.first + off + door_cells);
      ++walls;
      divide(cx0, k + 1, cy0, cy1);
      divide(k + 1, cx1, cy0, cy1);
    }
  }
};

inline int to_cells(double meters, double res) {
  return std::max(1, static_cast<int>(std::ceil(meters / res - 1e-9)));
}

inline GeneratedMap generate_indoor(const MapGenConfig& cfg, OccupancyGrid grid, Rng& rng) {
  const int t = to_cells(cfg.wall_thickness, cfg.resolution);
  const int door = to_cells(cfg.params().corridor_width, cfg.resolution);
  draw_border(grid, t);
  const auto xs = chamber_spans(t, grid.width() - 2 * t, door, t);
  const auto ys = chamber_spans(t, grid.height() - 2 * t, door, t);
  if (xs.empty() || ys.empty())
    throw GenerationError("mapgen: corridor width " + std::to_string(cfg.params().corridor_width) +
                          " m does not fit the requested map size");
  Maze maze{grid, xs, ys, door, rng};
  maze.divide(0, static_cast<int>(xs.size()), 0, static_cast<int>(ys.size()));
  auto report = free_space_report(grid, maze.walls);
  return {std::move(grid), report};
}

inline void rasterize_shape(OccupancyGrid& g, Vec2 c, bool disc, double a, double b) {
  const double reach = disc ? a : std::max(a, b);
  const CellIndex lo = g.cell_of(c - Vec2{reach, reach});
  const CellIndex hi = g.cell_of(c + Vec2{reach, reach});
  for (int y = std::max(lo.y, 0); y <= std::min(hi.y, g.height() - 1); ++y)
    for (int x = std::max(lo.x, 0); x <= std::min(hi.x, g.width() - 1); ++x) {
      const Vec2 p = g.cell_center({x, y});
      const bool inside = disc ? distance(p, c) <= a
                               : std::abs(p.x - c.x) <= a && std::abs(p.y - c.y) <= b;
      if (inside) g.set_occupied({x, y});
    }
}

inline GeneratedMap generate_outdoor(const MapGenConfig& cfg, OccupancyGrid grid, Rng& rng) {
  const int t = to_cells(cfg.wall_thickness, cfg.resolution);
  draw_border(grid, t);
  const auto& sp = cfg.params();
  std::uniform_real_distribution<double> ux(grid.origin().x, grid.origin().x + grid.width_m());
  std::uniform_real_distribution<double> uy(grid.origin().y, grid.origin().y + grid.height_m());
  std::uniform_real_distribution<double> ur(sp.obstacle_radius.min, sp.obstacle_radius.max);
  std::bernoulli_distribution is_disc(0.5);
  int placed = 0;
  for (int i = 0; i < sp.obstacle_count; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt <= kMaxRejectionsPerObstacle && !ok; ++attempt) {
      const Vec2 c{ux(rng), uy(rng)};
      const bool disc = is_disc(rng);
      const double a = ur(rng);
      const double b = disc ? a : ur(rng);
      OccupancyGrid candidate = grid;
      rasterize_shape(candidate, c, disc, a, b);
      int components = 0;
      label_free_components(candidate, &components);
      if (components == 1) {
        grid = std::move(candidate);
        ok = true;
      }
    }
    if (!ok)
      throw GenerationError("mapgen: obstacle " + std::to_string(i + 1) + " rejected " +
                            std::to_string(kMaxRejectionsPerObstacle) +
                            " times; stage too dense for the map size");
    ++placed;
  }
  auto report = free_space_report(grid, placed);
  return {std::move(grid), report};
}

}  // namespace detail

/// Procedurally generates a bordered map. Indoor maps are recursive-division
/// mazes whose doors are exactly one corridor width; outdoor maps scatter
/// discs and rectangles, rejecting any placement that splits the free space.
/// Deterministic in `cfg`.
inline GeneratedMap generate_map(const MapGenConfig& cfg) {
  cfg.validate();
  const int w = static_cast<int>(std::lround(cfg.width / cfg.resolution));
  const int h = static_cast<int>(std::lround(cfg.height / cfg.resolution));
  OccupancyGrid grid(w, h, cfg.resolution, {0.0, 0.0});
  Rng rng(derive_seed({cfg.seed, static_cast<std::uint64_t>(cfg.kind),
                       static_cast<std::uint64_t>(cfg.stage)}));
  GeneratedMap out = cfg.kind == MapKind::indoor ? detail::generate_indoor(cfg, std::move(grid), rng)
                                                 : detail::generate_outdoor(cfg, std::move(grid), rng);
  if (out.report.largest_component_fraction < kMinLargestComponentFraction)
    throw GenerationError("mapgen: largest free component below 60% of free space");
  return out;
}

/// Short identifier used for directory names and record headers.
inline std::string map_label(const MapGenConfig& cfg) {
  return std::string(to_string(cfg.kind)) + "_s" + std::to_string(cfg.stage) + "_seed" +
         std::to_string(cfg.seed);
}

inline nlohmann::json to_json(const MapGenConfig& c) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : c.stages)
    stages.push_back({{"corridor_width", s.corridor_width},
                      {"obstacle_count", s.obstacle_count},
                      {"obstacle_radius", {s.obstacle_radius.min, s.obstacle_radius.max}}});
  return {{"kind", to_string(c.kind)}, {"size", {c.width, c.height}},
          {"resolution", c.resolution}, {"stage", c.stage},
          {"seed", c.seed},             {"wall_thickness", c.wall_thickness},
          {"stages", stages}};
}

inline MapGenConfig mapgen_from_json(const nlohmann::json& j, const std::string& path = "generate") {
  MapGenConfig c;
  c.kind = map_kind_from_string(detail::field(j, "kind", path).get<std::string>());
  if (j.contains("size")) {
    const auto& s = j["size"];
    if (s.is_number()) {
      c.width = c.height = s.get<double>();
    } else if (s.is_array() && s.size() == 2) {
      c.width = detail::number(s[0], path + ".size[0]");
      c.height = detail::number(s[1], path + ".size[1]");
    } else {
      throw ParseError(path + ".size: expected a number or [width, height]");
    }
  }
  if (j.contains("resolution")) c.resolution = detail::number(j["resolution"], path + ".resolution");
  if (j.contains("stage")) c.stage = j["stage"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("wall_thickness"))
    c.wall_thickness = detail::number(j["wall_thickness"], path + ".wall_thickness");
  if (j.contains("stages")) {
    c.stages.clear();
    for (std::size_t i = 0; i < j["stages"].size(); ++i) {
      const auto& s = j["stages"][i];
      const std::string sp = path + ".stages[" + std::to_string(i) + "]";
      StageParams p;
      p.corridor_width = detail::number(detail::field(s, "corridor_width", sp), sp + ".corridor_width");
      p.obstacle_count = detail::field(s, "obstacle_count", sp).get<int>();
      p.obstacle_radius = detail::interval(detail::field(s, "obstacle_radius", sp), sp + ".obstacle_radius");
      c.stages.push_back(p);
    }
  }
  return c;
}

// --- curriculum -----------------------------------------------------------

/// One config per stage of `base.stages`, stage 1 first.
inline std::vector<MapGenConfig> default_curriculum(MapGenConfig base) {
  std::vector<MapGenConfig> out;
  for (int k = 1; k <= static_cast<int>(base.stages.size()); ++k) {
    base.stage = k;
    out.push_back(base);
  }
  return out;
}

/// Decides promotion from the outcomes recorded at the current stage.
using PromotionRule = std::function<bool(const std::vector<bool>& outcomes)>;

/// Promote once the last `window` outcomes reach `threshold` success rate.
inline PromotionRule success_rate_rule(std::size_t window, double threshold) {
  return [window, threshold](const std::vector<bool>& outcomes) {
    if (window == 0 || outcomes.size() < window) return false;
    const auto wins = std::count(outcomes.end() - static_cast<std::ptrdiff_t>(window), outcomes.end(), true);
    return static_cast<double>(wins) / static_cast<double>(window) >= threshold;
  };
}

inline PromotionRule always_promote() {
  return [](const std::vector<bool>& outcomes) { return !outcomes.empty(); };
}

inline PromotionRule never_promote() {
  return [](const std::vector<bool>&) { return false; };
}

/// Staged-mode curriculum. `next()` yields the stage (1-based) for the next
/// episode; `record()` feeds back its outcome. The final stage repeats.
class StageSchedule {
 public:
  StageSchedule(std::vector<MapGenConfig> curriculum, PromotionRule rule)
      : curriculum_(std::move(curriculum)), rule_(std::move(rule)) {
    if (curriculum_.empty()) throw ConfigError("stage schedule needs a non-empty curriculum");
  }

  int next() const { return static_cast<int>(index_) + 1; }
  int stage() const { return next(); }
  const MapGenConfig& current() const { return curriculum_[index_]; }
  std::size_t size() const { return curriculum_.size(); }

  void record(bool success) {
    outcomes_.push_back(success);
    if (index_ + 1 < curriculum_.size() && rule_(outcomes_)) {
      ++index_;
      outcomes_.clear();
    }
  }

 private:
  std::vector<MapGenConfig> curriculum_;
  PromotionRule rule_;
  std::size_t index_ = 0;
  std::vector<bool> outcomes_;
};

}  // namespace navbench
