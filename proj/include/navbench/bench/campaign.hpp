#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "navbench/bench/episode.hpp"
#include "navbench/bench/planner_factory.hpp"
#include "navbench/bench/svg_chart.hpp"
#include "navbench/core/error.hpp"
#include "navbench/core/random.hpp"
#include "navbench/mapgen/map_generator.hpp"
#include "navbench/metrics/metrics.hpp"
#include "navbench/metrics/record.hpp"
#include "navbench/task/scenario.hpp"
#include "navbench/task/task.hpp"

namespace navbench {

/// Runs per planner per scenario when a cell does not say otherwise.
inline constexpr int kDefaultRunsPerScenario = 15;

/// One block of a campaign: a task source crossed with robots, planners and
/// pedestrian counts.
struct CellConfig {
  std::string name;
  TaskMode mode = TaskMode::scenario;
  std::filesystem::path scenario;        ///< scenario mode
  std::optional<MapRef> map;             ///< random mode
  std::vector<MapGenConfig> curriculum;  ///< staged mode
  std::vector<std::string> robots;       ///< empty: the scenario's robot (scenario mode) or turtlebot3
  std::vector<std::string> planners = {"dwa"};
  /// Pedestrian counts. Scenario mode keeps the first N declared pedestrians;
  /// empty keeps them all. Random and staged modes spawn N pedestrians (empty: 0).
  std::vector<int> obstacle_counts;
  int runs = kDefaultRunsPerScenario;
  double pedestrian_speed = 0.3;
  std::optional<double> timeout;
  std::size_t promotion_window = 10;
  double promotion_threshold = 0.8;
};

struct CampaignConfig {
  std::string name = "campaign";
  std::filesystem::path output = "out";
  int parallelism = 1;
  std::uint64_t seed = 0;
  double timeout = 60.0;
  double dt = 0.05;
  double command_period = 0.1;
  std::chrono::milliseconds planner_deadline = bridge::kDefaultDeadline;
  std::filesystem::path base_dir;  ///< relative paths in cells resolve against this
  std::vector<CellConfig> cells;

  std::filesystem::path root() const { return output / name; }

  EpisodeOptions episode_options(const CellConfig& cell) const {
    EpisodeOptions o;
    o.dt = dt;
    o.command_period = command_period;
    o.timeout = cell.timeout.value_or(timeout);
    return o;
  }
};

// --- config parsing -----------------------------------------------------------

namespace detail {

template <typename T>
T cfg_get(const nlohmann::json& j, const char* key, const std::string& where, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace detail

inline CampaignConfig campaign_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("campaign: top level must be an object");
  CampaignConfig c;
  c.base_dir = base_dir;
  c.name = detail::cfg_get<std::string>(j, "name", "campaign", c.name);
  c.output = detail::cfg_get<std::string>(j, "output", "campaign", c.output.string());
  c.output = detail::resolve_path(c.output, base_dir);
  c.parallelism = detail::cfg_get<int>(j, "parallelism", "campaign", c.parallelism);
  c.seed = detail::cfg_get<std::uint64_t>(j, "seed", "campaign", c.seed);
  c.timeout = detail::cfg_get<double>(j, "timeout", "campaign", c.timeout);
  c.dt = detail::cfg_get<double>(j, "dt", "campaign", c.dt);
  c.command_period = detail::cfg_get<double>(j, "command_period", "campaign", c.command_period);
  c.planner_deadline =
      std::chrono::milliseconds(detail::cfg_get<int>(j, "planner_deadline_ms", "campaign", 100));
  const int default_runs = detail::cfg_get<int>(j, "runs_per_scenario", "campaign", kDefaultRunsPerScenario);
  auto cells = j.find("cells");
  if (cells == j.end() || !cells->is_array() || cells->empty())
    throw ConfigError("campaign.cells: expected a non-empty array");
  for (std::size_t i = 0; i < cells->size(); ++i) {
    const auto& cj = (*cells)[i];
    const std::string where = "campaign.cells[" + std::to_string(i) + "]";
    if (!cj.is_object()) throw ConfigError(where + ": expected an object");
    CellConfig cell;
    try {
      cell.mode = task_mode_from_string(detail::cfg_get<std::string>(cj, "mode", where, "scenario"));
    } catch (const std::exception& e) {
      throw ConfigError(where + ".mode: " + e.what());
    }
    cell.name = detail::cfg_get<std::string>(cj, "name", where, "");
    cell.runs = detail::cfg_get<int>(cj, "runs", where, default_runs);
    cell.robots = detail::cfg_get<std::vector<std::string>>(cj, "robots", where, {});
    cell.planners = detail::cfg_get<std::vector<std::string>>(cj, "planners", where, cell.planners);
    cell.obstacle_counts = detail::cfg_get<std::vector<int>>(cj, "obstacle_counts", where, {});
    cell.pedestrian_speed = detail::cfg_get<double>(cj, "pedestrian_speed", where, cell.pedestrian_speed);
    if (cj.contains("timeout")) cell.timeout = detail::cfg_get<double>(cj, "timeout", where, 0.0);
    cell.promotion_window = detail::cfg_get<std::size_t>(cj, "promotion_window", where, cell.promotion_window);
    cell.promotion_threshold = detail::cfg_get<double>(cj, "promotion_threshold", where, cell.promotion_threshold);
    try {
      switch (cell.mode) {
        case TaskMode::scenario:
          cell.scenario = detail::resolve_path(detail::cfg_get<std::string>(cj, "scenario", where, ""), base_dir);
          if (cell.name.empty()) cell.name = cell.scenario.stem().string();
          break;
        case TaskMode::random:
          if (!cj.contains("map")) throw ConfigError(where + ".map: required in random mode");
          cell.map = map_ref_from_json(cj["map"], where + ".map");
          if (!cell.map->file.empty()) cell.map->file = detail::resolve_path(cell.map->file, base_dir).string();
          if (cell.name.empty()) cell.name = cell.map->label();
          break;
        case TaskMode::staged: {
          const auto cur = cj.value("curriculum", nlohmann::json("default"));
          if (cur.is_string() && cur.get<std::string>() == "default") {
            MapGenConfig base;
            if (cj.contains("generate")) base = mapgen_from_json(cj["generate"], where + ".generate");
            cell.curriculum = default_curriculum(base);
          } else if (cur.is_array()) {
            for (std::size_t k = 0; k < cur.size(); ++k)
              cell.curriculum.push_back(mapgen_from_json(cur[k], where + ".curriculum[" + std::to_string(k) + "]"));
          } else {
            throw ConfigError(where + ".curriculum: expected \"default\" or an array");
          }
          if (cell.name.empty()) cell.name = "staged";
          break;
        }
      }
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
    c.cells.push_back(std::move(cell));
  }
  return c;
}

/// Replaces the global seed with BENCH_SEED when that variable is set.
inline void apply_bench_seed(CampaignConfig& cfg) {
  const char* env = std::getenv("BENCH_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    std::size_t used = 0;
    cfg.seed = std::stoull(env, &used, 0);
    if (env[used] != '\0') throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ConfigError(std::string("BENCH_SEED is not an unsigned integer: ") + env);
  }
}

/// Reads a campaign file. BENCH_SEED, when set, replaces the global seed.
inline CampaignConfig load_campaign(const std::filesystem::path& path, bool apply_env = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read campaign config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto cfg = campaign_from_json(j, path.parent_path());
  if (apply_env) apply_bench_seed(cfg);
  return cfg;
}

// --- expansion ------------------------------------------------------------------

/// Filesystem-safe rendition of a label; long or lossy labels get a stable hash suffix.
inline std::string path_label(const std::string& s) {
  std::string out;
  bool lossy = false;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
    lossy |= !ok;
  }
  if (out.empty() || out == "." || out == "..") lossy = true, out = "x";
  if (lossy || out.size() > 48) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
    std::ostringstream hex;
    hex << std::hex << (h & 0xffffffffull);
    out = out.substr(0, 40) + "_" + hex.str();
  }
  return out;
}

/// One (cell, pedestrian count, robot, planner) combination with `runs` episodes.
struct EpisodeGroup {
  std::size_t cell = 0;
  std::size_t count_index = 0;
  std::size_t robot_index = 0;
  int obstacle_count = -1;  ///< -1: as declared by the scenario
  std::string robot;
  std::string planner;
  std::filesystem::path dir;
  int runs = 0;
};

inline std::filesystem::path run_file(const EpisodeGroup& g, int run) {
  return g.dir / ("run_" + std::to_string(run) + ".jsonl");
}

/// Episode seed: independent of the planner so every planner faces the same tasks.
inline std::uint64_t episode_seed(const CampaignConfig& cfg, const EpisodeGroup& g, int run) {
  return derive_seed({cfg.seed, g.cell, g.count_index, g.robot_index, static_cast<std::uint64_t>(run)});
}

/// Inputs shared read-only by every episode of a cell.
struct PreparedCell {
  std::optional<Scenario> scenario;
  std::optional<OccupancyGrid> grid;
  std::string dir_name;
};

struct PreparedCampaign {
  CampaignConfig cfg;
  std::vector<PreparedCell> cells;
  std::vector<EpisodeGroup> groups;
};

/// Validates the campaign (planners, robots, maps, scenarios) and expands it
/// into episode groups. Throws ConfigError on any problem, before anything runs.
inline PreparedCampaign prepare_campaign(const CampaignConfig& cfg) {
  PreparedCampaign p;
  p.cfg = cfg;
  if (cfg.parallelism < 1) throw ConfigError("campaign.parallelism must be >= 1");
  if (cfg.planner_deadline.count() <= 0) throw ConfigError("campaign.planner_deadline_ms must be positive");
  if (cfg.name.empty()) throw ConfigError("campaign.name must not be empty");
  std::set<std::string> dir_names;
  for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci) {
    const auto& cell = cfg.cells[ci];
    const std::string where = "campaign.cells[" + std::to_string(ci) + "]";
    cfg.episode_options(cell).steps_per_command();
    if (cell.runs < 1) throw ConfigError(where + ".runs must be >= 1");
    if (cell.planners.empty()) throw ConfigError(where + ".planners must not be empty");
    for (const auto& id : cell.planners) check_planner_id(id);
    for (int n : cell.obstacle_counts)
      if (n < 0) throw ConfigError(where + ".obstacle_counts must be >= 0");

    PreparedCell pc;
    pc.dir_name = path_label(cell.name);
    std::vector<std::string> robots = cell.robots;
    try {
      switch (cell.mode) {
        case TaskMode::scenario: {
          if (cell.scenario.empty()) throw ConfigError(where + ".scenario: required in scenario mode");
          pc.scenario = load_scenario(cell.scenario, false);
          pc.grid = resolve_map(pc.scenario->map, cell.scenario.parent_path());
          if (robots.empty()) robots = {pc.scenario->robot.spec};
          for (const auto& r : robots) {
            Scenario s = *pc.scenario;
            s.robot.spec = r;
            validate_scenario(s, *pc.grid);
          }
          for (int n : cell.obstacle_counts)
            if (static_cast<std::size_t>(n) > pc.scenario->pedestrians.size())
              throw ConfigError(where + ".obstacle_counts: scenario declares only " +
                                std::to_string(pc.scenario->pedestrians.size()) + " pedestrians");
          break;
        }
        case TaskMode::random:
          pc.grid = resolve_map(*cell.map);
          break;
        case TaskMode::staged:
          for (const auto& m : cell.curriculum) m.validate();
          break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (robots.empty()) robots = {"turtlebot3"};
    for (const auto& r : robots) {
      try {
        resolve_robot(r);
      } catch (const std::exception& e) {
        throw ConfigError(where + ".robots: " + e.what());
      }
    }

    std::vector<int> counts = cell.obstacle_counts;
    const bool explicit_counts = !counts.empty();
    if (counts.empty()) counts = {cell.mode == TaskMode::scenario ? -1 : 0};
    for (std::size_t k = 0; k < counts.size(); ++k) {
      std::string dir = pc.dir_name;
      if (explicit_counts) dir += "_p" + std::to_string(counts[k]);
      if (!dir_names.insert(dir).second) throw ConfigError(where + ": duplicate output directory '" + dir + "'");
      for (std::size_t ri = 0; ri < robots.size(); ++ri)
        for (const auto& planner : cell.planners) {
          EpisodeGroup g;
          g.cell = ci;
          g.count_index = k;
          g.robot_index = ri;
          g.obstacle_count = counts[k];
          g.robot = robots[ri];
          g.planner = planner;
          g.dir = cfg.root() / dir / path_label(robots[ri]) / path_label(planner);
          g.runs = cell.runs;
          p.groups.push_back(std::move(g));
        }
    }
    p.cells.push_back(std::move(pc));
  }
  return p;
}

// --- execution ------------------------------------------------------------------

struct CampaignResult {
  std::filesystem::path root;
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t planner_errors = 0;
  std::vector<std::string> failures;  ///< episodes that could not be set up
  std::vector<MetricsReport> reports;
  std::vector<GroupSummary> summary;

  /// 0 ok, 3 when any episode ended in planner_error, 1 when an episode could not be set up.
  int exit_code() const {
    if (planner_errors > 0) return 3;
    if (!failures.empty()) return 1;
    return 0;
  }
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline Scenario scenario_for(const PreparedCampaign& p, const EpisodeGroup& g, int run, std::uint64_t seed,
                             const OccupancyGrid& grid, const MapRef& map) {
  const auto& cell = p.cfg.cells[g.cell];
  if (cell.mode == TaskMode::scenario) {
    Scenario s = *p.cells[g.cell].scenario;
    s.robot.spec = g.robot;
    if (g.obstacle_count >= 0) s.pedestrians.resize(static_cast<std::size_t>(g.obstacle_count));
    return s;
  }
  TaskConfig tc;
  tc.robot = g.robot;
  tc.obstacle_count = g.obstacle_count;
  tc.pedestrian_speed = cell.pedestrian_speed;
  Rng rng(derive_seed({seed, 3}));
  Scenario s = sample_random_task(grid, tc, rng, map);
  s.name = cell.name + "_run" + std::to_string(run);
  s.seed = seed;
  return s;
}

/// A finished record for this exact episode, if one is on disk. Records from a
/// different seed or planner (e.g. after changing BENCH_SEED) do not count.
inline std::optional<EpisodeRecord> try_load(const std::filesystem::path& path, std::uint64_t seed,
                                             const std::string& planner) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    auto rec = load_episode(path);
    if (rec.meta.seed != seed || rec.meta.planner != planner) return std::nullopt;
    return rec;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable leftovers are re-run
  }
}

inline std::string write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
  return path.string();
}

}  // namespace detail

struct ChartSpec {
  const char* metric;  ///< metric column name, or "success_rate"
  const char* title;
  const char* unit;
};

inline const std::vector<ChartSpec>& chart_specs() {
  static const std::vector<ChartSpec> specs = {
      {"success_rate", "Success rate", "%"},
      {"collisions", "Collisions per episode", "count"},
      {"time_to_goal", "Time to goal", "s"},
      {"path_length", "Path length", "m"},
      {"velocity_avg", "Average velocity", "m/s"},
      {"acceleration_avg", "Average acceleration", "m/s^2"},
      {"jerk_avg", "Average jerk", "m/s^3"},
      {"curvature_avg", "Average curvature", "1/m"},
      {"angle_over_length", "Angle over length", "rad/m"},
      {"roughness", "Roughness", "-"},
      {"clearing_avg", "Average clearing distance", "m"},
  };
  return specs;
}

/// One chart per metric: mean value over pedestrian count, one series per
/// planner (split further by robot and map when the campaign has several).
inline std::vector<std::pair<std::string, std::string>> campaign_charts(std::span<const GroupSummary> groups) {
  std::set<std::string> robots, maps;
  for (const auto& g : groups) robots.insert(g.key.robot), maps.insert(g.key.map);
  auto series_label = [&](const GroupKey& k) {
    std::string l = k.planner;
    if (robots.size() > 1) l += " / " + k.robot;
    if (maps.size() > 1) l += " / " + k.map;
    return l;
  };
  const auto& cols = metric_columns();
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : chart_specs()) {
    std::map<std::string, ChartSeries> series;
    for (const auto& g : groups) {
      double y = 0.0;
      if (std::string(spec.metric) == "success_rate") {
        y = g.success_rate;
      } else {
        std::size_t i = 0;
        while (i < cols.size() && std::string(cols[i].name) != spec.metric) ++i;
        if (i == cols.size() || g.metrics[i].count == 0) continue;
        y = g.metrics[i].mean;
      }
      auto& s = series[series_label(g.key)];
      s.label = series_label(g.key);
      s.points.emplace_back(g.key.obstacle_count, y);
    }
    std::vector<ChartSeries> list;
    for (auto& [_, s] : series) list.push_back(std::move(s));
    out.emplace_back(std::string(spec.metric) + ".svg",
                     line_chart_svg(spec.title, "pedestrians", std::string(spec.title) + " [" + spec.unit + "]", list));
  }
  return out;
}

/// Runs every missing episode, then scores all records and writes the reports.
/// Existing run files are kept, so an interrupted campaign resumes where it stopped.
inline CampaignResult run_campaign(const CampaignConfig& cfg, const ProgressFn& progress = {}) {
  const PreparedCampaign prep = prepare_campaign(cfg);
  CampaignResult result;
  result.root = cfg.root();
  std::filesystem::create_directories(result.root);

  PlannerOptions popt;
  popt.deadline = cfg.planner_deadline;

  // Work items: one per episode, except staged groups which run in order.
  struct Item {
    std::size_t group;
    int run;  ///< -1: whole staged group
  };
  std::vector<Item> items;
  for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
    const auto& g = prep.groups[gi];
    if (cfg.cells[g.cell].mode == TaskMode::staged) {
      items.push_back({gi, -1});
    } else {
      for (int k = 0; k < g.runs; ++k) items.push_back({gi, k});
    }
  }

  std::mutex mu;
  auto log = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard lock(mu);
    progress(msg);
  };
  auto fail = [&](const std::string& msg) {
    std::lock_guard lock(mu);
    result.failures.push_back(msg);
  };
  std::atomic<std::size_t> executed{0}, skipped{0};

  auto run_one = [&](const EpisodeGroup& g, int run, const Scenario& s, const OccupancyGrid& grid,
                     std::uint64_t seed) {
    const auto& cell = cfg.cells[g.cell];
    EpisodeLabels labels;
    labels.planner = g.planner;
    labels.run = run;
    labels.obstacle_count = g.obstacle_count >= 0 ? g.obstacle_count : static_cast<int>(s.pedestrians.size());
    labels.episode_id = cfg.name + "/" + std::filesystem::relative(run_file(g, run), cfg.root()).generic_string();
    const RobotSpec robot = resolve_robot(g.robot);
    auto rec = run_episode(s, grid, robot, g.planner, seed, cfg.episode_options(cell), labels, popt);
    save_episode(rec, run_file(g, run));
    ++executed;
    log(labels.episode_id + ": " + to_string(rec.status()));
    return rec;
  };

  auto process = [&](const Item& item) {
    const auto& g = prep.groups[item.group];
    const auto& cell = cfg.cells[g.cell];
    if (item.run >= 0) {
      const auto path = run_file(g, item.run);
      if (detail::try_load(path, episode_seed(cfg, g, item.run), g.planner)) {
        ++skipped;
        return;
      }
      const std::uint64_t seed = episode_seed(cfg, g, item.run);
      try {
        const auto& pc = prep.cells[g.cell];
        const MapRef map = cell.mode == TaskMode::scenario ? pc.scenario->map : *cell.map;
        const Scenario s = detail::scenario_for(prep, g, item.run, seed, *pc.grid, map);
        run_one(g, item.run, s, *pc.grid, seed);
      } catch (const std::exception& e) {
        fail(run_file(g, item.run).string() + ": " + e.what());
      }
      return;
    }
    // Staged: promotion depends on earlier outcomes, so the group runs in order.
    StageSchedule schedule(cell.curriculum, success_rate_rule(cell.promotion_window, cell.promotion_threshold));
    std::map<int, OccupancyGrid> grids;
    for (int k = 0; k < g.runs; ++k) {
      const auto path = run_file(g, k);
      std::optional<EpisodeRecord> rec = detail::try_load(path, episode_seed(cfg, g, k), g.planner);
      if (rec) {
        ++skipped;
      } else {
        const std::uint64_t seed = episode_seed(cfg, g, k);
        try {
          MapRef map;
          map.generate = schedule.current();
          auto it = grids.find(schedule.stage());
          if (it == grids.end()) it = grids.emplace(schedule.stage(), resolve_map(map)).first;
          const Scenario s = detail::scenario_for(prep, g, k, seed, it->second, map);
          rec = run_one(g, k, s, it->second, seed);
        } catch (const std::exception& e) {
          fail(path.string() + ": " + e.what());
          return;  // later stages depend on this outcome
        }
      }
      schedule.record(evaluate(*rec).success);
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) process(items[i]);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  result.executed = executed;
  result.skipped = skipped;
  std::sort(result.failures.begin(), result.failures.end());

  // Score everything on disk, in a fixed order.
  std::map<std::size_t, std::vector<MetricsReport>> per_cell_dir;
  std::map<std::size_t, std::string> cell_dir_names;
  for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
    const auto& g = prep.groups[gi];
    for (int k = 0; k < g.runs; ++k) {
      auto rec = detail::try_load(run_file(g, k), episode_seed(cfg, g, k), g.planner);
      if (!rec) continue;
      auto report = evaluate(*rec);
      if (report.status == EpisodeStatus::planner_error) ++result.planner_errors;
      const std::size_t dir_key = g.cell * 1000003u + g.count_index;
      cell_dir_names[dir_key] = std::filesystem::relative(g.dir, cfg.root()).begin()->string();
      per_cell_dir[dir_key].push_back(report);
      result.reports.push_back(std::move(report));
    }
  }
  for (const auto& [key, reports] : per_cell_dir) {
    nlohmann::json j;
    j["episodes"] = nlohmann::json::array();
    for (const auto& r : reports) j["episodes"].push_back(to_json(r));
    j["groups"] = nlohmann::json::array();
    for (const auto& g : aggregate(reports)) j["groups"].push_back(to_json(g));
    detail::write_text(cfg.root() / cell_dir_names[key] / "metrics.json", j.dump(2) + "\n");
  }
  result.summary = aggregate(result.reports);
  detail::write_text(cfg.root() / "metrics.csv", to_csv(result.summary));
  nlohmann::json summary;
  summary["campaign"] = cfg.name;
  summary["seed"] = cfg.seed;
  summary["episodes"] = result.reports.size();
  summary["planner_errors"] = result.planner_errors;
  summary["failures"] = result.failures;
  summary["groups"] = nlohmann::json::array();
  for (const auto& g : result.summary) summary["groups"].push_back(to_json(g));
  detail::write_text(cfg.root() / "summary.json", summary.dump(2) + "\n");
  for (const auto& [file, svg] : campaign_charts(result.summary))
    detail::write_text(cfg.root() / "charts" / file, svg);
  return result;
}

/// Scores every record under `dir` (recursively) without running anything.
inline std::vector<MetricsReport> evaluate_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<MetricsReport> out;
  for (const auto& f : files) out.push_back(evaluate(load_episode(f)));
  return out;
}

}  // namespace navbench
