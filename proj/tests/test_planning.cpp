#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "navbench/mapgen/map_generator.hpp"
#include "navbench/planning/astar.hpp"
#include "navbench/planning/dwa.hpp"
#include "navbench/planning/local_planner.hpp"
#include "navbench/planning/subgoal.hpp"
#include "oracles.hpp"

using namespace navbench;
constexpr double kSqrt2 = std::numbers::sqrt2;

namespace {

CellIndex random_free_cell(const OccupancyGrid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ux(0, g.width() - 1), uy(0, g.height() - 1);
  for (;;) {
    const CellIndex c{ux(rng), uy(rng)};
    if (!g.occupied(c)) return c;
  }
}

GlobalPath straight_path(Vec2 a, Vec2 b, int segments) {
  GlobalPath p;
  for (int i = 0; i <= segments; ++i) p.waypoints.push_back(a + (static_cast<double>(i) / segments) * (b - a));
  p.cost = distance(a, b);
  return p;
}

double distance_to_polyline(const GlobalPath& path, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i)
    best = std::min(best, oracle::point_segment_distance(p, path.waypoints[i], path.waypoints[i + 1]));
  return best;
}

RobotState at(Pose2 pose, VelocityCommand v = {}) {
  RobotState s;
  s.pose = pose;
  s.velocity = v;
  return s;
}

}  // namespace

// --- A* ---------------------------------------------------------------------------

TEST(AStar, MatchesDijkstraOnRandomGrids) {
  std::mt19937_64 rng(2024);
  int solvable = 0;
  for (int n = 0; n < 100; ++n) {
    const auto g = oracle::random_grid(30, 30, 0.3, rng);
    const auto s = random_free_cell(g, rng), t = random_free_cell(g, rng);
    const auto ref = oracle::dijkstra_cost(g, s, t);
    const auto got = astar_cells(g, s, t);
    ASSERT_EQ(ref.has_value(), got.has_value()) << "grid " << n;
    if (!ref) continue;
    ++solvable;
    EXPECT_EQ(got->cost, *ref) << "grid " << n;
    if (s != t) {
      EXPECT_EQ(g.cell_of(got->waypoints.front()), s);
      EXPECT_EQ(g.cell_of(got->waypoints.back()), t);
    }
  }
  EXPECT_GT(solvable, 30);
}

TEST(AStar, EmptyGridDiagonal) {
  const OccupancyGrid g(5, 5, 0.1);
  const auto p = astar_cells(g, {0, 0}, {4, 4});
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->cost, 4.0 * kSqrt2 * 0.1);
  EXPECT_EQ(p->waypoints.size(), 5u);
}

TEST(AStar, StartEqualsGoalGivesEmptyPath) {
  const OccupancyGrid g(5, 5, 0.1);
  const auto p = astar(g, {0.25, 0.25}, {0.26, 0.24}, 0.0);
  ASSERT_TRUE(p);
  EXPECT_TRUE(p->empty());
  EXPECT_EQ(p->cost, 0.0);
}

TEST(AStar, CollisionEndpointsAreDomainErrors) {
  OccupancyGrid g(10, 10, 0.1);
  g.set_occupied(CellIndex{5, 5});
  EXPECT_THROW(astar_cells(g, {5, 5}, {0, 0}), DomainError);
  EXPECT_THROW(astar_cells(g, {0, 0}, {5, 5}), DomainError);
}

TEST(AStar, UnreachableIsNotAnException) {
  OccupancyGrid g(10, 10, 0.1);
  for (int y = 0; y < 10; ++y) g.set_occupied(CellIndex{5, y});
  EXPECT_FALSE(astar_cells(g, {1, 1}, {8, 8}).has_value());
}

TEST(AStar, WallWithSingleGapPassesThroughGap) {
  OccupancyGrid g(30, 30, 0.1);
  for (int y = 0; y < 30; ++y)
    if (y != 22) g.set_occupied(CellIndex{15, y});
  const auto p = astar_cells(g, {2, 2}, {27, 2});
  ASSERT_TRUE(p);
  bool through_gap = false;
  for (const auto& w : p->waypoints) through_gap |= g.cell_of(w) == CellIndex{15, 22};
  EXPECT_TRUE(through_gap);
  EXPECT_EQ(p->cost, *oracle::dijkstra_cost(g, {2, 2}, {27, 2}));
}

TEST(AStar, PathIsContiguousAndNoCornerCutting) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 20; ++n) {
    const auto g = oracle::random_grid(30, 30, 0.25, rng);
    const auto p = astar_cells(g, random_free_cell(g, rng), random_free_cell(g, rng));
    if (!p) continue;
    for (std::size_t i = 1; i < p->waypoints.size(); ++i) {
      EXPECT_LE(distance(p->waypoints[i - 1], p->waypoints[i]), kSqrt2 * 0.1 + 1e-12);
      const auto a = g.cell_of(p->waypoints[i - 1]), b = g.cell_of(p->waypoints[i]);
      EXPECT_FALSE(g.occupied(b));
      if (a.x != b.x && a.y != b.y) {
        EXPECT_FALSE(g.occupied(CellIndex{b.x, a.y}));
        EXPECT_FALSE(g.occupied(CellIndex{a.x, b.y}));
      }
    }
    EXPECT_NEAR(p->length(), p->cost, 1e-9);
  }
}

TEST(AStar, InflatedPathKeepsRobotClearance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MapGenConfig cfg;
    cfg.seed = seed;
    cfg.stage = 2;
    const auto map = generate_map(cfg).grid;
    const double r = turtlebot3().radius;
    const FreeRegion region(map, r);
    Rng rng(seed);
    const Vec2 a = map.cell_center(map.cell_of(region.sample(rng)));
    const Vec2 b = map.cell_center(map.cell_of(region.sample(rng)));
    const auto p = astar(map, a, b, r);
    ASSERT_TRUE(p) << seed;
    for (const auto& w : p->waypoints) EXPECT_GE(oracle::brute_nearest_cell(map, w), r - map.resolution());
  }
}

// --- spatial horizon --------------------------------------------------------------

TEST(Subgoal, TwoMetersAheadOnStraightPath) {
  const auto path = straight_path({0, 0}, {10, 0}, 100);
  const auto sg = next_subgoal(path, at({0, 0, 0}), SubgoalPolicy{});
  EXPECT_NEAR(sg.x, 2.0, 1e-12);
  EXPECT_NEAR(sg.y, 0.0, 1e-12);
}

TEST(Subgoal, ShortRemainderGivesFinalGoal) {
  const auto path = straight_path({0, 0}, {10, 0}, 100);
  EXPECT_EQ(subgoal_on_path(path, {8.5, 0.2}, 2.0, Vec2{10.05, 0.0}), (Vec2{10.05, 0.0}));
  EXPECT_EQ(subgoal_on_path(path, {8.5, 0.2}, 2.0), (Vec2{10.0, 0.0}));
}

TEST(Subgoal, StationaryRobotRefreshesAtTimeLimit) {
  SpatialHorizon h;
  h.set_path(straight_path({0, 0}, {10, 0}, 100), {10, 0});
  const auto robot = at({0, 0, 0});
  h.update(robot, 0.0);
  EXPECT_EQ(h.updates(), 1);
  for (double t = 0.1; t < 3.95; t += 0.1) h.update(robot, t);
  EXPECT_EQ(h.updates(), 1);
  h.update(robot, 4.0);
  EXPECT_EQ(h.updates(), 2);
  EXPECT_EQ(h.last_update(), 4.0);
}

TEST(Subgoal, ReachingSubgoalRefreshesIt) {
  SpatialHorizon h;
  h.set_path(straight_path({0, 0}, {10, 0}, 100), {10, 0});
  const Vec2 first = h.update(at({0, 0, 0}), 0.0);
  EXPECT_EQ(h.update(at({1.0, 0, 0}), 0.5), first);
  const Vec2 second = h.update(at({1.8, 0, 0}), 1.0);
  EXPECT_NEAR(second.x, 3.8, 1e-12);
  EXPECT_EQ(h.updates(), 2);
}

TEST(Subgoal, AlwaysLiesOnThePath) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (int n = 0; n < 30; ++n) {
    const auto g = oracle::random_grid(40, 40, 0.15, rng);
    const auto p = astar_cells(g, random_free_cell(g, rng), random_free_cell(g, rng));
    if (!p || p->waypoints.size() < 2) continue;
    for (const auto& w : p->waypoints) {
      const Vec2 robot = w + Vec2{jitter(rng), jitter(rng)};
      EXPECT_LE(distance_to_polyline(*p, subgoal_on_path(*p, robot, 2.0)), 1e-6);
    }
  }
}

TEST(Subgoal, InvalidPolicyRejected) {
  EXPECT_THROW(SpatialHorizon(SubgoalPolicy{0.0, 4.0}), DomainError);
  EXPECT_THROW(SpatialHorizon(SubgoalPolicy{2.0, -1.0}), DomainError);
}

// --- DWA --------------------------------------------------------------------------

TEST(Dwa, EmptyMapCruiseKeepsMaxSpeedStraight) {
  const OccupancyGrid g(200, 200, 0.05);
  const Vec2 far_ahead{1000.0, 5.0};
  for (const auto& spec : builtin_robots()) {
    const VelocityCommand cruise{spec.bounds.vlin_x.max, 0.0, 0.0};
    const auto s = at({5, 5, 0}, cruise);
    const auto scan = raycast(g, s.pose.position(), 0.0, spec.lidar);
    const auto cmd = dwa_plan(s, scan, far_ahead, spec);
    EXPECT_EQ(cmd.vx, spec.bounds.vlin_x.max) << spec.name;
    EXPECT_EQ(cmd.vy, 0.0) << spec.name;
    EXPECT_EQ(cmd.omega, 0.0) << spec.name;

    const auto ref = oracle::dwa_exhaustive(s, scan, far_ahead, spec, DwaConfig{});
    const auto best = std::min_element(ref.begin(), ref.end(),
                                       [](const auto& a, const auto& b) { return a.score < b.score; });
    EXPECT_EQ(best->cmd, cmd) << spec.name;
  }
}

TEST(Dwa, WallAheadIsNeverDrivenInto) {
  OccupancyGrid g(200, 200, 0.05);
  const auto spec = turtlebot3();
  const double wall_x = 5.0 + spec.radius + 0.2;
  for (int y = 0; y < 200; ++y)
    for (int x = g.cell_of({wall_x, 0.0}).x; x < 200; ++x) g.set_occupied(CellIndex{x, y});
  const auto s = at({5, 5, 0}, {spec.bounds.vlin_x.max, 0.0, 0.0});
  const auto scan = raycast(g, s.pose.position(), 0.0, spec.lidar);
  const DwaConfig cfg;
  const auto cmd = dwa_plan(s, scan, {9.0, 5.0}, spec, cfg);
  // Over the whole planning horizon the chosen arc stays out of the wall.
  for (int k = 1; k <= 15; ++k) {
    const auto p = oracle::arc_pose(s.pose, cmd.vx, cmd.vy, cmd.omega, k * cfg.dt_sim);
    EXPECT_LT(p.x + spec.radius, wall_x) << "k=" << k;
  }
}

TEST(Dwa, AgreesWithExhaustiveScorer) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DwaConfig cfg;
  cfg.n_v = 8;
  cfg.n_omega = 12;
  cfg.n_vy = 3;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    MapGenConfig mc;
    mc.seed = seed;
    mc.stage = 3;
    const auto map = generate_map(mc).grid;
    for (const auto& spec : builtin_robots()) {
      const FreeRegion region(map, spec.radius);
      Rng prng(seed);
      for (int n = 0; n < 4; ++n) {
        const Vec2 p = region.sample(prng);
        if (!is_placeable_disc(map, p, spec.radius)) continue;
        VelocityCommand v{spec.bounds.vlin_x.min + u(rng) * spec.bounds.vlin_x.width(),
                          spec.bounds.vlin_y.min + u(rng) * spec.bounds.vlin_y.width(),
                          spec.bounds.vang.min + u(rng) * spec.bounds.vang.width()};
        const auto s = at({p.x, p.y, (u(rng) * 2.0 - 1.0) * std::numbers::pi}, v);
        const auto scan = raycast(map, p, s.pose.theta, spec.lidar);
        const Vec2 sub = region.sample(prng);
        const auto lib = dwa_evaluate(s, scan, sub, spec, cfg);
        const auto ref = oracle::dwa_exhaustive(s, scan, sub, spec, cfg);
        ASSERT_EQ(lib.size(), ref.size());
        for (std::size_t i = 0; i < lib.size(); ++i) {
          ASSERT_EQ(lib[i].cmd.vx, ref[i].cmd.vx);
          ASSERT_EQ(lib[i].cmd.omega, ref[i].cmd.omega);
          EXPECT_NEAR(lib[i].cmd.vy, ref[i].cmd.vy, 1e-15);
          EXPECT_EQ(lib[i].admissible, ref[i].admissible) << spec.name << " sample " << i;
          if (lib[i].admissible && ref[i].admissible) EXPECT_NEAR(lib[i].score, ref[i].score, 1e-9);
        }
        const auto cmd = dwa_plan(s, scan, sub, spec, cfg);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : ref) best = std::min(best, r.score);
        if (std::isfinite(best)) {
          const auto it = std::find_if(ref.begin(), ref.end(), [&](const auto& r) {
            return r.cmd.vx == cmd.vx && r.cmd.omega == cmd.omega && std::abs(r.cmd.vy - cmd.vy) < 1e-15;
          });
          ASSERT_NE(it, ref.end());
          EXPECT_NEAR(it->score, best, 1e-9);
        } else {
          EXPECT_EQ(cmd, dwa_fallback(s, sub, spec));
        }
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 40);
}

TEST(Dwa, SelectedCommandIsSafeOnResimulation) {
  const auto map = generate_map(MapGenConfig{}).grid;
  const DwaConfig cfg;
  for (const auto& spec : builtin_robots()) {
    const FreeRegion region(map, spec.radius);
    Rng rng(5);
    for (int n = 0; n < 20; ++n) {
      const Vec2 p = region.sample(rng);
      if (!is_placeable_disc(map, p, spec.radius)) continue;
      const auto s = at({p.x, p.y, 0.3 * n});
      const auto scan = raycast(map, p, s.pose.theta, spec.lidar);
      const auto cmd = dwa_plan(s, scan, region.sample(rng), spec, cfg);
      const auto pts = scan_endpoints(scan, spec.lidar, s.pose);
      const int brake = static_cast<int>(std::ceil(std::hypot(cmd.vx, cmd.vy) / spec.accel.lin / cfg.dt_sim - 1e-12));
      for (int k = 1; k <= brake; ++k) {
        const auto q = oracle::arc_pose(s.pose, cmd.vx, cmd.vy, cmd.omega, k * cfg.dt_sim);
        for (const auto& o : pts) ASSERT_GE(distance(o, q.position()), spec.radius) << spec.name;
      }
    }
  }
}

TEST(Dwa, AllBlockedFallsBackToRotation) {
  // At full speed the window excludes standstill, so every sample hits the
  // ring of returns before it can brake.
  const auto spec = jackal();
  Scan scan;
  scan.ranges.assign(static_cast<std::size_t>(spec.lidar.beam_count), 0.3);
  const auto s = at({0, 0, 0}, {spec.bounds.vlin_x.max, 0.0, 0.0});
  for (const auto& c : dwa_evaluate(s, scan, {0.0, 3.0}, spec, DwaConfig{})) ASSERT_FALSE(c.admissible);
  EXPECT_EQ(dwa_plan(s, scan, {0.0, 3.0}, spec), (VelocityCommand{0.0, 0.0, spec.bounds.vang.max}));
  EXPECT_EQ(dwa_plan(s, scan, {0.0, -3.0}, spec).omega, spec.bounds.vang.min);
}

TEST(Dwa, StandstillStaysAdmissibleWhenBoxedIn) {
  const auto spec = turtlebot3();
  Scan scan;
  scan.ranges.assign(static_cast<std::size_t>(spec.lidar.beam_count), 0.15);
  const auto cmd = dwa_plan(at({0, 0, 0}), scan, {3.0, 0.0}, spec);
  EXPECT_EQ(cmd.vx, 0.0);
}

TEST(Dwa, DeterministicAndInsideWindow) {
  const auto map = generate_map(MapGenConfig{}).grid;
  const auto spec = robotino();
  const auto s = at({3.0, 3.0, 0.5}, {0.4, -0.2, 0.3});
  const auto scan = raycast(map, s.pose.position(), s.pose.theta, spec.lidar);
  const auto a = dwa_plan(s, scan, {10, 10}, spec);
  EXPECT_EQ(a, dwa_plan(s, scan, {10, 10}, spec));
  EXPECT_TRUE(within_bounds(a, spec));
  const DwaConfig cfg;
  EXPECT_LE(std::abs(a.vx - s.velocity.vx), spec.accel.lin * cfg.command_period + 1e-12);
  EXPECT_LE(std::abs(a.omega - s.velocity.omega), spec.accel.ang * cfg.command_period + 1e-12);
}

TEST(Dwa, ScanLengthAndConfigValidated) {
  const auto spec = turtlebot3();
  Scan scan;
  scan.ranges.assign(10, 1.0);
  EXPECT_THROW(dwa_plan(RobotState{}, scan, {1, 0}, spec), DomainError);
  DwaConfig cfg;
  cfg.n_v = 1;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.w_heading = cfg.w_clearance = cfg.w_velocity = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}
