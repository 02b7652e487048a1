// Acceptance checks: one PASS/FAIL line per criterion, each with its own
// wall-clock budget. Exits non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "navbench/bench/campaign.hpp"
#include "navbench/bench/episode.hpp"
#include "navbench/bridge/external_planner.hpp"
#include "navbench/crowd/social_force.hpp"
#include "navbench/mapgen/map_generator.hpp"
#include "navbench/metrics/metrics.hpp"
#include "navbench/planning/astar.hpp"
#include "oracles.hpp"

using namespace navbench;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail, error;
  try {
    detail = body();
  } catch (const Failure& f) {
    error = f.what;
  } catch (const std::exception& e) {
    error = std::string("exception: ") + e.what();
  }
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (error.empty() && took > budget_s) error = "took " + str(took) + " s, budget " + str(budget_s) + " s";
  if (error.empty()) {
    std::printf("PASS %-28s %7.2f s  %s\n", name, took, detail.c_str());
  } else {
    ++failures;
    std::printf("FAIL %-28s %7.2f s  %s\n", name, took, error.c_str());
  }
  std::fflush(stdout);
}

std::string fake_id(const std::string& args) {
  return std::string("extern:cmd=\"") + NAVBENCH_FAKE_PLANNER + " " + args + "\"";
}

// --- individual criteria ---------------------------------------------------------------

std::string astar_vs_dijkstra() {
  std::mt19937_64 rng(2024);
  int solvable = 0;
  for (int n = 0; n < 100; ++n) {
    const auto g = oracle::random_grid(30, 30, 0.3, rng);
    std::uniform_int_distribution<int> u(0, 29);
    auto free_cell = [&] {
      for (;;) {
        const CellIndex c{u(rng), u(rng)};
        if (!g.occupied(c)) return c;
      }
    };
    const auto s = free_cell(), t = free_cell();
    const auto ref = oracle::dijkstra_cost(g, s, t);
    const auto got = astar_cells(g, s, t);
    require(ref.has_value() == got.has_value(), "grid " + str(n) + ": reachability differs");
    if (!ref) continue;
    require(got->cost == *ref, "grid " + str(n) + ": cost " + str(got->cost) + " vs " + str(*ref));
    ++solvable;
  }
  return "100 grids, " + str(solvable) + " solvable, costs identical";
}

EpisodeRecord record_from_points(const std::vector<Vec2>& pts, double dt) {
  EpisodeRecord r;
  r.meta.dt = dt;
  r.meta.robot_radius = 0.15;
  r.meta.lidar_max_range = 4.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Sample s;
    s.stamp = static_cast<double>(i) * dt;
    const Vec2 d = i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - 1];
    s.pose = {pts[i].x, pts[i].y, std::atan2(d.y, d.x)};
    s.velocity = {norm(d) / dt, 0.0, 0.0};
    s.min_scan = 1.0;
    s.clearance = 1.0;
    r.samples.push_back(s);
  }
  r.events.push_back({r.samples.back().stamp, event::goal_reached, {}});
  return r;
}

std::string metric_oracles() {
  // Straight line in steps of (0.375, 0.5), length 0.625 each: every sum is exact.
  std::vector<Vec2> line;
  for (int i = 0; i <= 100; ++i) line.push_back({1.0 + 0.375 * i, 2.0 + 0.5 * i});
  const auto s = evaluate(record_from_points(line, 0.125));
  require(s.path_length && *s.path_length == 62.5, "straight path_length " + str(s.path_length.value_or(-1)));
  require(s.curvature && s.curvature->avg == 0.0 && s.curvature->max == 0.0, "straight curvature not zero");
  require(s.jerk_avg && *s.jerk_avg == 0.0, "straight jerk " + str(s.jerk_avg.value_or(-1)));
  require(s.roughness && *s.roughness == 0.0, "straight roughness " + str(s.roughness.value_or(-1)));

  std::vector<Vec2> arc;
  for (int i = 0; i < 200; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 200.0;
    arc.push_back({5.0 + 2.0 * std::cos(a), 5.0 + 2.0 * std::sin(a)});
  }
  const auto c = evaluate(record_from_points(arc, 0.1));
  require(c.curvature.has_value(), "circle curvature missing");
  const double rel = std::abs(c.curvature->avg - 0.5) / 0.5;
  require(rel <= 0.01, "circle curvature_avg " + str(c.curvature->avg));
  return "line length 62.5 exact, circle curvature " + str(c.curvature->avg);
}

std::string clamp_tables() {
  struct Box {
    double x_lo, x_hi, y_lo, y_hi, w_lo, w_hi;
  };
  const std::vector<std::pair<RobotSpec, Box>> platforms = {
      {turtlebot3(), {0.0, 0.22, 0.0, 0.0, -2.7, 2.7}},
      {jackal(), {-2.0, 2.0, 0.0, 0.0, -4.0, 4.0}},
      {robotino(), {-2.78, 2.78, -2.78, 2.78, -1.0, 1.0}},
  };
  auto ref = [](double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); };
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  int checked = 0;
  for (const auto& [spec, b] : platforms) {
    auto expect = [&](const VelocityCommand& c) {
      const VelocityCommand want{ref(c.vx, b.x_lo, b.x_hi), ref(c.vy, b.y_lo, b.y_hi), ref(c.omega, b.w_lo, b.w_hi)};
      require(clamp_action(c, spec) == want, spec.name + ": clamp mismatch at (" + str(c.vx) + ", " + str(c.vy) +
                                                 ", " + str(c.omega) + ")");
      ++checked;
    };
    for (int n = 0; n < 1000; ++n) expect({u(rng), u(rng), u(rng)});
    const std::vector<double> xs = {b.x_lo, b.x_hi, b.x_lo - 1.0, b.x_hi + 1.0, 0.0};
    const std::vector<double> ys = {b.y_lo, b.y_hi, b.y_lo - 1.0, b.y_hi + 1.0, 0.0};
    const std::vector<double> ws = {b.w_lo, b.w_hi, b.w_lo - 1.0, b.w_hi + 1.0, 0.0};
    for (double x : xs)
      for (double y : ys)
        for (double w : ws) expect({x, y, w});
  }
  return str(checked) + " commands across 3 platforms";
}

std::string social_force_suite() {
  const OccupancyGrid g(400, 100, 0.1);
  SocialAgent a;
  a.position = {2.0, 5.0};
  a.waypoints = {{8.0, 5.0}};
  const auto f = social_force_terms(a, std::span<const SocialAgent>(&a, 1), g);
  require(f.driving.x == 0.6 && f.driving.y == 0.0, "driving force (" + str(f.driving.x) + ", " + str(f.driving.y) + ")");

  std::vector<SocialAgent> pair(2);
  pair[0].id = 0;
  pair[0].position = {3.0, 5.0};
  pair[0].waypoints = {{7.0, 5.0}};
  pair[0].velocity = {0.2, 0.0};
  pair[1].id = 1;
  pair[1].position = {7.0, 5.0};
  pair[1].waypoints = {{3.0, 5.0}};
  pair[1].velocity = {-0.2, 0.0};
  const Vec2 f0 = social_force(pair[0], pair, g), f1 = social_force(pair[1], pair, g);
  const double asym = std::max(std::abs(f0.x + f1.x), std::abs(f0.y + f1.y));
  require(asym <= 1e-9, "head-on asymmetry " + str(asym));

  const SocialForceParams p;
  for (double dt : {0.05, 0.01}) {
    Rng rng(1);
    SocialAgent w;
    w.position = {1.0, 5.0};
    w.waypoints = {{39.0, 5.0}};
    std::vector<SocialAgent> agents = {w};
    double t = 0.0;
    while (norm(agents[0].velocity) < 0.95 * p.desired_speed) {
      agents = step_crowd(std::move(agents), g, dt, CrowdMode::loop, rng);
      t += dt;
      require(t < 10.0, "never relaxed");
    }
    require(std::abs(t - 3.0 * p.relaxation_time) <= dt + 1e-9, "relaxation at dt " + str(dt) + " took " + str(t));
  }
  return "driving (0.6, 0), asymmetry " + str(asym);
}

CampaignConfig crossing_campaign(const fs::path& dir, const fs::path& scenario, std::vector<std::string> planners,
                                 int runs, double timeout) {
  CampaignConfig cfg;
  cfg.name = "acceptance";
  cfg.output = dir / "out";
  cfg.seed = 5;
  cfg.timeout = timeout;
  CellConfig cell;
  cell.scenario = scenario;
  cell.name = "crossing";
  cell.planners = std::move(planners);
  cell.runs = runs;
  cfg.cells.push_back(cell);
  return cfg;
}

std::map<std::string, std::string> records_under(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".jsonl")
      out[fs::relative(e.path(), root).generic_string()] = detail::read_file(e.path());
  return out;
}

std::string determinism() {
  const auto grid = fixture::room();
  const auto s = fixture::crossing(8, "jackal", 2);
  EpisodeOptions opt;
  opt.timeout = 10.0;
  const auto a = run_episode(s, grid, jackal(), "dwa", 4242, opt);
  const auto b = run_episode(s, grid, jackal(), "dwa", 4242, opt);
  require(to_jsonl(a) == to_jsonl(b), "repeated episode differs");

  const auto dir = fixture::scratch_dir("acc_determinism");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(6), "crossing");
  auto cfg = crossing_campaign(dir, scenario, {"dwa"}, 8, 6.0);
  cfg.cells[0].robots = {"turtlebot3", "jackal"};
  cfg.output = dir / "p1";
  cfg.parallelism = 1;
  run_campaign(cfg);
  const auto serial = records_under(cfg.root());
  cfg.output = dir / "p8";
  cfg.parallelism = 8;
  run_campaign(cfg);
  const auto parallel = records_under(cfg.root());
  require(serial.size() == 16, "expected 16 records, found " + str(serial.size()));
  require(serial == parallel, "records differ between parallelism 1 and 8");
  fs::remove_all(dir);
  return "repeat identical; 16 records identical at parallelism 1 and 8";
}

std::string protocol_conformance() {
  const auto grid = fixture::room();
  const std::vector<std::string> robots = {"turtlebot3", "jackal", "robotino"};
  EpisodeOptions opt;
  opt.timeout = 8.0;
  EpisodeLabels labels;
  labels.planner = "dwa";
  for (int v = 0; v < 10; ++v) {
    const auto s = fixture::crossing(4 + v % 4, robots[v % 3], v);
    const RobotSpec robot = resolve_robot(s.robot.spec);
    validate_scenario(s, grid);
    DwaPlanner local;
    bridge::ExternalPlanner remote(
        bridge::transport_factory(*bridge::parse_extern_id(std::string("extern:cmd=") + NAVBENCH_ECHO_PLANNER)),
        std::chrono::milliseconds(2000));
    const auto a = run_episode(s, grid, robot, local, 100 + v, opt, labels);
    const auto b = run_episode(s, grid, robot, remote, 100 + v, opt, labels);
    require(a == b && to_jsonl(a) == to_jsonl(b), "scenario " + str(v) + ": bridged record differs");
    require(remote.session_log().size() == a.samples.size() / 2, "scenario " + str(v) + ": session log length");
  }

  // Deadline misses: every third reply is late, the robot keeps the previous command.
  PlannerOptions popt;
  popt.deadline = std::chrono::milliseconds(100);
  EpisodeOptions short_opt;
  short_opt.timeout = 1.5;
  const auto s = fixture::crossing(0);
  const auto late = run_episode(s, grid, turtlebot3(), fake_id("slow 3 150"), 0, short_opt, {}, popt);
  require(late.status() == EpisodeStatus::timeout, "deadline episode status " + std::string(to_string(late.status())));
  require(late.count_events(event::deadline_missed) == 5, "deadline misses " + str(late.count_events(event::deadline_missed)));

  // Malformed reply: the episode ends with a planner error naming the byte offset.
  const auto bad = run_episode(s, grid, turtlebot3(), fake_id("garbage 2"), 0, short_opt);
  const auto* e = bad.find_event(event::planner_error);
  require(bad.status() == EpisodeStatus::planner_error && e != nullptr, "malformed reply not a planner error");
  require(e->detail.find("byte") != std::string::npos, "planner error lacks byte offset: " + e->detail);
  return "10 scenarios identical; 5 deadline misses; malformed reply -> planner_error";
}

std::string experiment_protocol() {
  const auto dir = fixture::scratch_dir("acc_protocol");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(10), "crossing");
  auto cfg = crossing_campaign(dir, scenario, {"dwa", "teleport-oracle"}, CellConfig{}.runs, 1.0);
  cfg.cells[0].obstacle_counts = {5, 10};
  const auto r = run_campaign(cfg);
  require(r.exit_code() == 0, "campaign exit code " + str(r.exit_code()));
  std::map<std::string, int> per_dir;
  for (const auto& [path, text] : records_under(cfg.root())) per_dir[fs::path(path).parent_path().generic_string()]++;
  require(per_dir.size() == 4, "expected 4 record directories, found " + str(per_dir.size()));
  for (const auto& [d, n] : per_dir) require(n == 15, d + " holds " + str(n) + " runs");
  std::map<int, std::size_t> per_count;
  for (const auto& g : r.summary) {
    require(g.episodes == 15, "group with " + str(g.episodes) + " episodes");
    per_count[g.key.obstacle_count] += g.episodes;
  }
  require(per_count.size() == 2 && per_count[5] == 30 && per_count[10] == 30, "5/10 pedestrian groups incomplete");
  const auto csv = detail::read_file(cfg.root() / "metrics.csv");
  require(std::count(csv.begin(), csv.end(), '\n') == 5, "metrics.csv should have a header and 4 rows");
  fs::remove_all(dir);
  return "60 records = 2 planners x 2 counts x 15 runs";
}

std::string directional_trend() {
  const auto dir = fixture::scratch_dir("acc_trend");
  CampaignConfig cfg;
  cfg.name = "trend";
  cfg.output = dir;
  cfg.seed = 2024;
  CellConfig cell;
  cell.mode = TaskMode::random;
  cell.map = MapRef{};
  MapGenConfig gen;
  gen.kind = MapKind::outdoor;
  gen.width = gen.height = 15.0;
  cell.map->generate = gen;
  cell.planners = {"dwa"};
  cell.obstacle_counts = {5, 10};
  cell.runs = 30;
  cfg.cells.push_back(cell);
  const auto r = run_campaign(cfg);
  std::map<int, const GroupSummary*> by_count;
  for (const auto& g : r.summary) by_count[g.key.obstacle_count] = &g;
  require(by_count.count(5) && by_count.count(10), "missing pedestrian group");
  const auto& g5 = *by_count[5];
  const auto& g10 = *by_count[10];
  require(g5.episodes >= 30 && g10.episodes >= 30, "fewer than 30 episodes per cell");
  const auto collisions = [&](int count) {
    double sum = 0.0;
    int n = 0;
    for (const auto& rep : r.reports)
      if (rep.key.obstacle_count == count) sum += rep.collisions, ++n;
    return sum / n;
  };
  const double c5 = collisions(5), c10 = collisions(10);
  require(c10 >= c5, "mean collisions at 10 (" + str(c10) + ") below 5 (" + str(c5) + ")");
  require(g10.success_rate <= g5.success_rate,
          "success at 10 (" + str(g10.success_rate) + "%) above 5 (" + str(g5.success_rate) + "%)");
  fs::remove_all(dir);
  std::ostringstream os;
  os.precision(3);
  os << "collisions " << c5 << " -> " << c10 << ", success " << g5.success_rate << "% -> " << g10.success_rate << "%";
  return os.str();
}

// Number of 4-connected free components, by explicit flood fill.
int free_components(const OccupancyGrid& g) {
  std::vector<char> seen(static_cast<std::size_t>(g.width()) * g.height(), 0);
  int components = 0;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      const auto idx = static_cast<std::size_t>(y) * g.width() + x;
      if (seen[idx] || g.occupied(CellIndex{x, y})) continue;
      ++components;
      std::queue<CellIndex> q;
      q.push({x, y});
      seen[idx] = 1;
      while (!q.empty()) {
        const auto c = q.front();
        q.pop();
        for (const auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const CellIndex n{c.x + dx, c.y + dy};
          if (!g.in_bounds(n) || g.occupied(n)) continue;
          const auto ni = static_cast<std::size_t>(n.y) * g.width() + n.x;
          if (seen[ni]) continue;
          seen[ni] = 1;
          q.push(n);
        }
      }
    }
  return components;
}

std::string mapgen_suite() {
  std::ostringstream os;
  os.precision(3);
  for (const MapKind kind : {MapKind::indoor, MapKind::outdoor}) {
    std::vector<double> mean_free;
    for (int stage = 1; stage <= 3; ++stage) {
      double sum = 0.0;
      for (std::uint64_t seed = 0; seed < 200; ++seed) {
        MapGenConfig cfg;
        cfg.kind = kind;
        cfg.stage = stage;
        cfg.seed = seed;
        const auto m = generate_map(cfg);
        const int comps = free_components(m.grid);
        require(comps == 1, std::string(to_string(kind)) + " stage " + str(stage) + " seed " + str(seed) + ": " +
                                str(comps) + " free components");
        sum += oracle::free_fraction(m.grid);
      }
      mean_free.push_back(sum / 200.0);
    }
    require(mean_free[0] > mean_free[1] && mean_free[1] > mean_free[2],
            std::string(to_string(kind)) + ": free fraction not decreasing over stages");
    os << to_string(kind) << " free " << mean_free[0] << " > " << mean_free[1] << " > " << mean_free[2] << "; ";
  }
  return os.str() + "1200 maps connected";
}

}  // namespace

int main() {
  criterion("astar_matches_dijkstra", 5.0, astar_vs_dijkstra);
  criterion("metric_oracles", 1.0, metric_oracles);
  criterion("action_clamp_tables", 1.0, clamp_tables);
  criterion("social_force", 1.0, social_force_suite);
  criterion("determinism", 30.0, determinism);
  criterion("protocol_conformance", 60.0, protocol_conformance);
  criterion("runs_and_pedestrian_groups", 60.0, experiment_protocol);
  criterion("directional_trend", 300.0, directional_trend);
  criterion("mapgen_connectivity", 60.0, mapgen_suite);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
