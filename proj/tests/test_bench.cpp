#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "navbench/bench/campaign.hpp"
#include "navbench/bench/episode.hpp"
#include "navbench/bridge/external_planner.hpp"
#include "navbench/metrics/metrics.hpp"

using namespace navbench;
namespace fs = std::filesystem;

namespace {

std::string fake_id(const std::string& args) {
  return std::string("extern:cmd=\"") + NAVBENCH_FAKE_PLANNER + " " + args + "\"";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& root, const std::string& ext) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ext)
      out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

std::size_t count_files(const fs::path& root, const std::string& ext) { return tree_contents(root, ext).size(); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NAVBENCH_BENCH_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

CampaignConfig scenario_campaign(const fs::path& dir, const fs::path& scenario, std::vector<std::string> planners,
                                 int runs, double timeout) {
  CampaignConfig cfg;
  cfg.name = "c";
  cfg.output = dir / "out";
  cfg.seed = 11;
  cfg.timeout = timeout;
  CellConfig cell;
  cell.mode = TaskMode::scenario;
  cell.scenario = scenario;
  cell.name = "crossing";
  cell.planners = std::move(planners);
  cell.runs = runs;
  cfg.cells.push_back(cell);
  return cfg;
}

}  // namespace

// --- single episodes -------------------------------------------------------------------

TEST(Episode, StraightLinePlannerReachesGoalOnEmptyMap) {
  const OccupancyGrid empty(200, 200, 0.05);
  Scenario s;
  s.robot.start = {1.0, 1.0, 0.0};
  s.robot.goal = {9.0, 9.0};
  const auto rec = run_episode(s, empty, jackal(), "teleport-oracle", 1);
  EXPECT_EQ(rec.status(), EpisodeStatus::goal_reached);
  EXPECT_EQ(rec.count_events(event::collision_start), 0u);
  const auto report = evaluate(rec);
  EXPECT_TRUE(report.success);
  EXPECT_EQ(report.collisions, 0);
  EXPECT_LT(distance(rec.samples.back().pose.position(), s.robot.goal), 0.3);
}

TEST(Episode, SameScenarioAndSeedGiveIdenticalRecords) {
  const auto grid = fixture::room();
  const auto s = fixture::crossing(6);
  const auto a = run_episode(s, grid, turtlebot3(), "dwa", 99, EpisodeOptions{.timeout = 15.0});
  const auto b = run_episode(s, grid, turtlebot3(), "dwa", 99, EpisodeOptions{.timeout = 15.0});
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_jsonl(a), to_jsonl(b));
  EXPECT_GT(a.samples.size(), 10u);
}

TEST(Episode, TimeoutEndsTheEpisodeAsFailure) {
  const auto grid = fixture::room();
  const auto s = fixture::crossing(0);
  EpisodeOptions opt;
  opt.timeout = 1.0;
  const auto rec = run_episode(s, grid, turtlebot3(), "dwa", 3, opt);
  EXPECT_EQ(rec.status(), EpisodeStatus::timeout);
  ASSERT_FALSE(rec.events.empty());
  EXPECT_EQ(rec.events.back().type, event::timeout);
  EXPECT_DOUBLE_EQ(rec.samples.back().stamp, 1.0);
  EXPECT_EQ(rec.samples.size(), 21u);
  EXPECT_FALSE(evaluate(rec).success);
}

TEST(Episode, UnknownPlannerIsRejectedBeforeSimulating) {
  const auto grid = fixture::room();
  EXPECT_THROW(run_episode(fixture::crossing(0), grid, turtlebot3(), "teb", 0), ConfigError);
  EXPECT_THROW(check_planner_id("extern:ftp=x"), ConfigError);
  EXPECT_NO_THROW(check_planner_id("extern:tcp=localhost:9000"));
}

TEST(Episode, DrivingThroughAWallCountsCollisions) {
  auto grid = fixture::room();
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 98; x < 102; ++x) grid.set_occupied(CellIndex{x, y});
  Scenario s;
  s.robot.start = {2.0, 5.0, 0.0};
  s.robot.goal = {8.0, 5.0};
  const auto rec = run_episode(s, grid, jackal(), "teleport-oracle", 0);
  EXPECT_EQ(rec.status(), EpisodeStatus::goal_reached);
  EXPECT_EQ(evaluate(rec).collisions, 1);
  EXPECT_TRUE(evaluate(rec).success);  // a single collision still counts as success
}

TEST(Episode, MalformedPlannerReplyEndsWithPlannerError) {
  const auto grid = fixture::room();
  const auto rec = run_episode(fixture::crossing(2), grid, turtlebot3(), fake_id("garbage 4"), 0);
  EXPECT_EQ(rec.status(), EpisodeStatus::planner_error);
  const auto* e = rec.find_event(event::planner_error);
  ASSERT_NE(e, nullptr);
  EXPECT_NE(e->detail.find("malformed"), std::string::npos) << e->detail;
  EXPECT_DOUBLE_EQ(e->stamp, 0.4);
  EXPECT_FALSE(evaluate(rec).success);
}

TEST(Episode, PlannerThatNeverHandshakesIsPlannerError) {
  const auto grid = fixture::room();
  PlannerOptions popt;
  popt.handshake_timeout = std::chrono::milliseconds(200);
  const auto rec = run_episode(fixture::crossing(0), grid, turtlebot3(), fake_id("bad-version"), 0, {}, {}, popt);
  EXPECT_EQ(rec.status(), EpisodeStatus::planner_error);
  EXPECT_EQ(rec.samples.size(), 1u);
}

TEST(Episode, DeadlineMissesAreRecordedAsEvents) {
  const auto grid = fixture::room();
  EpisodeOptions opt;
  opt.timeout = 2.0;
  PlannerOptions popt;
  popt.deadline = std::chrono::milliseconds(100);
  const auto rec = run_episode(fixture::crossing(0), grid, turtlebot3(), fake_id("slow 4 150"), 0, opt, {}, popt);
  EXPECT_EQ(rec.status(), EpisodeStatus::timeout);
  EXPECT_EQ(rec.count_events(event::deadline_missed), 5u);
  for (const auto& e : rec.events)
    if (e.type == event::deadline_missed) {
      const double tick = std::round(e.stamp / 0.1);
      EXPECT_NEAR(e.stamp, 0.1 * tick, 1e-9);
      EXPECT_EQ(static_cast<long>(tick) % 4, 3) << e.stamp;
    }
}

TEST(Episode, ExternalEchoMatchesInProcessDwa) {
  const auto grid = fixture::room();
  const auto s = fixture::crossing(5, "robotino", 3);
  EpisodeOptions opt;
  opt.timeout = 20.0;
  EpisodeLabels labels;
  labels.planner = "dwa";
  DwaPlanner local;
  bridge::ExternalPlanner remote(
      bridge::transport_factory(*bridge::parse_extern_id(std::string("extern:cmd=") + NAVBENCH_ECHO_PLANNER)),
      std::chrono::milliseconds(2000));
  const auto a = run_episode(s, grid, robotino(), local, 21, opt, labels);
  const auto b = run_episode(s, grid, robotino(), remote, 21, opt, labels);
  EXPECT_EQ(to_jsonl(a), to_jsonl(b));
  EXPECT_EQ(remote.session_log().size(), a.samples.size() / 2);
}

// --- campaigns --------------------------------------------------------------------------

TEST(Campaign, FifteenRunsPerPlannerWithReportsAndCharts) {
  const auto dir = fixture::scratch_dir("campaign15");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(3), "crossing");
  auto cfg = scenario_campaign(dir, scenario, {"dwa", "teleport-oracle"}, kDefaultRunsPerScenario, 4.0);
  ASSERT_EQ(CellConfig{}.runs, 15);
  const auto r = run_campaign(cfg);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(r.executed, 30u);
  EXPECT_EQ(count_files(cfg.root(), ".jsonl"), 30u);
  for (const char* planner : {"dwa", "teleport-oracle"})
    for (int k = 0; k < 15; ++k)
      EXPECT_TRUE(fs::exists(cfg.root() / "crossing" / "turtlebot3" / planner / ("run_" + std::to_string(k) + ".jsonl")))
          << planner << " " << k;
  const auto rows = csv_rows(slurp(cfg.root() / "metrics.csv"));
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][4], "15");
  EXPECT_TRUE(fs::exists(cfg.root() / "crossing" / "metrics.json"));
  EXPECT_GE(count_files(cfg.root() / "charts", ".svg"), 3u);
  EXPECT_NE(slurp(cfg.root() / "charts" / "collisions.svg").find("<svg"), std::string::npos);
}

TEST(Campaign, PedestrianCountsFormSeparateGroups) {
  const auto dir = fixture::scratch_dir("groups");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(10), "crossing");
  auto cfg = scenario_campaign(dir, scenario, {"dwa"}, 2, 3.0);
  cfg.cells[0].obstacle_counts = {5, 10};
  const auto r = run_campaign(cfg);
  EXPECT_EQ(r.executed, 4u);
  const auto rows = csv_rows(slurp(cfg.root() / "metrics.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][3], "obstacle_count");
  EXPECT_EQ(rows[1][3], "5");
  EXPECT_EQ(rows[2][3], "10");
  const auto rec = load_episode(cfg.root() / "crossing_p5" / "turtlebot3" / "dwa" / "run_0.jsonl");
  EXPECT_EQ(rec.meta.obstacle_count, 5);
}

TEST(Campaign, RandomModeSpawnsRequestedPedestrians) {
  const auto dir = fixture::scratch_dir("random");
  CampaignConfig cfg;
  cfg.name = "r";
  cfg.output = dir;
  cfg.timeout = 2.0;
  CellConfig cell;
  cell.mode = TaskMode::random;
  cell.map = MapRef{};
  cell.map->generate = MapGenConfig{};
  cell.obstacle_counts = {5, 10};
  cell.runs = 3;
  cfg.cells.push_back(cell);
  const auto r = run_campaign(cfg);
  ASSERT_EQ(r.reports.size(), 6u);
  std::map<int, int> per_count;
  for (const auto& rep : r.reports) ++per_count[rep.key.obstacle_count];
  EXPECT_EQ(per_count[5], 3);
  EXPECT_EQ(per_count[10], 3);
}

TEST(Campaign, ResumeRunsOnlyMissingEpisodes) {
  const auto dir = fixture::scratch_dir("resume");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(4), "crossing");
  const auto cfg = scenario_campaign(dir, scenario, {"dwa", "teleport-oracle"}, 3, 3.0);
  const auto first = run_campaign(cfg);
  EXPECT_EQ(first.executed, 6u);
  const auto before = tree_contents(cfg.root(), ".jsonl");
  const auto csv_before = slurp(cfg.root() / "metrics.csv");

  fs::remove(cfg.root() / "crossing" / "turtlebot3" / "dwa" / "run_1.jsonl");
  fs::remove(cfg.root() / "crossing" / "turtlebot3" / "teleport-oracle" / "run_2.jsonl");
  const auto second = run_campaign(cfg);
  EXPECT_EQ(second.executed, 2u);
  EXPECT_EQ(second.skipped, 4u);
  EXPECT_EQ(tree_contents(cfg.root(), ".jsonl"), before);
  EXPECT_EQ(slurp(cfg.root() / "metrics.csv"), csv_before);

  const auto third = run_campaign(cfg);
  EXPECT_EQ(third.executed, 0u);
  EXPECT_EQ(third.skipped, 6u);
}

TEST(Campaign, TruncatedRecordIsRerun) {
  const auto dir = fixture::scratch_dir("truncated");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(2), "crossing");
  const auto cfg = scenario_campaign(dir, scenario, {"dwa"}, 2, 2.0);
  run_campaign(cfg);
  const auto path = cfg.root() / "crossing" / "turtlebot3" / "dwa" / "run_0.jsonl";
  const auto full = slurp(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << full.substr(0, full.size() / 2);
  }
  const auto r = run_campaign(cfg);
  EXPECT_EQ(r.executed, 1u);
  EXPECT_EQ(slurp(path), full);
}

TEST(Campaign, ParallelismDoesNotChangeAnyRecord) {
  const auto dir = fixture::scratch_dir("parallel");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(6), "crossing");
  auto cfg = scenario_campaign(dir, scenario, {"dwa"}, 8, 4.0);
  cfg.cells[0].robots = {"turtlebot3", "robotino"};
  cfg.output = dir / "serial";
  cfg.parallelism = 1;
  run_campaign(cfg);
  const auto serial = tree_contents(cfg.root(), ".jsonl");
  const auto serial_csv = slurp(cfg.root() / "metrics.csv");
  cfg.output = dir / "parallel";
  cfg.parallelism = 4;
  run_campaign(cfg);
  EXPECT_EQ(serial.size(), 16u);
  EXPECT_EQ(tree_contents(cfg.root(), ".jsonl"), serial);
  EXPECT_EQ(slurp(cfg.root() / "metrics.csv"), serial_csv);
}

TEST(Campaign, SeedsDependOnRunButNotOnPlanner) {
  const auto dir = fixture::scratch_dir("seeds");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(1), "crossing");
  const auto cfg = scenario_campaign(dir, scenario, {"dwa", "teleport-oracle"}, 2, 1.0);
  const auto prep = prepare_campaign(cfg);
  ASSERT_EQ(prep.groups.size(), 2u);
  EXPECT_EQ(episode_seed(cfg, prep.groups[0], 0), episode_seed(cfg, prep.groups[1], 0));
  EXPECT_NE(episode_seed(cfg, prep.groups[0], 0), episode_seed(cfg, prep.groups[0], 1));
  auto other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_NE(episode_seed(cfg, prep.groups[0], 0), episode_seed(other, prep.groups[0], 0));
}

TEST(Campaign, BenchSeedOverridesConfiguredSeed) {
  const auto dir = fixture::scratch_dir("envseed");
  {
    std::ofstream out(dir / "campaign.json");
    out << R"({"name":"e","seed":5,"cells":[{"scenario":"crossing.json"}]})";
  }
  ::unsetenv("BENCH_SEED");
  EXPECT_EQ(load_campaign(dir / "campaign.json").seed, 5u);
  ::setenv("BENCH_SEED", "1234", 1);
  EXPECT_EQ(load_campaign(dir / "campaign.json").seed, 1234u);
  EXPECT_EQ(load_campaign(dir / "campaign.json", false).seed, 5u);
  ::setenv("BENCH_SEED", "12ab", 1);
  EXPECT_THROW(load_campaign(dir / "campaign.json"), ConfigError);
  ::unsetenv("BENCH_SEED");
}

TEST(Campaign, InvalidConfigFailsBeforeRunning) {
  const auto dir = fixture::scratch_dir("invalid");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(1), "crossing");
  auto cfg = scenario_campaign(dir, scenario, {"dwa", "rrt"}, 2, 1.0);
  EXPECT_THROW(run_campaign(cfg), ConfigError);
  EXPECT_FALSE(fs::exists(cfg.root()));
  cfg.cells[0].planners = {"dwa"};
  cfg.parallelism = 0;
  EXPECT_THROW(run_campaign(cfg), ConfigError);
  cfg.parallelism = 1;
  cfg.cells[0].robots = {"hovercraft"};
  EXPECT_THROW(run_campaign(cfg), ConfigError);
  cfg.cells[0].robots = {};
  cfg.cells[0].scenario = dir / "missing.json";
  EXPECT_THROW(run_campaign(cfg), ConfigError);
}

TEST(Campaign, PlannerErrorsSetExitCode) {
  const auto dir = fixture::scratch_dir("plerr");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(1), "crossing");
  const auto cfg = scenario_campaign(dir, scenario, {fake_id("exit 2")}, 2, 2.0);
  const auto r = run_campaign(cfg);
  EXPECT_EQ(r.planner_errors, 2u);
  EXPECT_EQ(r.exit_code(), 3);
  EXPECT_EQ(count_files(cfg.root(), ".jsonl"), 2u);
}

TEST(Campaign, StagedModeRecordsEveryRun) {
  const auto dir = fixture::scratch_dir("staged");
  CampaignConfig cfg;
  cfg.name = "s";
  cfg.output = dir;
  cfg.timeout = 2.0;
  CellConfig cell;
  cell.mode = TaskMode::staged;
  cell.name = "staged";
  cell.curriculum = default_curriculum(MapGenConfig{});
  cell.runs = 4;
  cfg.cells.push_back(cell);
  const auto r = run_campaign(cfg);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(r.reports.size(), 4u);
  EXPECT_EQ(count_files(cfg.root(), ".jsonl"), 4u);
}

TEST(Campaign, ShippedConfigsAndScenariosAreValid) {
  const fs::path data = fs::path(NAVBENCH_SOURCE_DIR) / "data";
  int campaigns = 0, scenarios = 0;
  for (const auto& e : fs::directory_iterator(data / "campaigns")) {
    const auto cfg = load_campaign(e.path(), false);
    EXPECT_NO_THROW(prepare_campaign(cfg)) << e.path();
    ++campaigns;
  }
  for (const auto& e : fs::directory_iterator(data / "scenarios")) {
    EXPECT_NO_THROW(load_scenario(e.path(), true)) << e.path();
    ++scenarios;
  }
  EXPECT_GE(campaigns, 4);
  EXPECT_GE(scenarios, 2);
}

// --- command line -------------------------------------------------------------------------

TEST(Cli, ExitCodes) {
  const auto dir = fixture::scratch_dir("cli");
  const auto scenario = fixture::write_scenario(dir, fixture::crossing(2), "crossing");
  auto bad = fixture::crossing(2);
  bad.pedestrians[1].start = {0.05, 5.0};
  const auto bad_scenario = fixture::write_scenario(dir, bad, "bad");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const auto ok_cfg = write("ok.json", R"({"name":"ok","output":"out","runs_per_scenario":2,"timeout":2,)"
                                       R"("cells":[{"scenario":"crossing.json"}]})");
  const auto err_cfg = write("err.json", R"({"name":"err","output":"out","runs_per_scenario":1,"timeout":2,)"
                                         R"("cells":[{"scenario":"crossing.json","planners":[")" +
                                             std::string("extern:cmd=") + NAVBENCH_FAKE_PLANNER +
                                             R"( exit 0"]}]})");
  const auto unknown_cfg = write("unknown.json", R"({"name":"u","cells":[{"scenario":"crossing.json","planners":["x"]}]})");

  EXPECT_EQ(run_cli("run --config " + ok_cfg), 0);
  EXPECT_EQ(count_files(dir / "out" / "ok", ".jsonl"), 2u);
  EXPECT_EQ(run_cli("run --config " + err_cfg), 3);
  EXPECT_EQ(run_cli("run --config " + unknown_cfg), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "absent.json").string()), 2);
  EXPECT_EQ(run_cli("validate --scenario " + scenario.string()), 0);
  EXPECT_EQ(run_cli("validate --scenario " + bad_scenario.string()), 2);
  EXPECT_EQ(run_cli("eval --records " + (dir / "out" / "ok").string() + " --csv " + (dir / "eval.csv").string()), 0);
  EXPECT_EQ(slurp(dir / "eval.csv"), slurp(dir / "out" / "ok" / "metrics.csv"));
  EXPECT_EQ(run_cli("mapgen --kind indoor --size 8 --stage 2 --seed 3 --out " + (dir / "maps" / "m").string()), 0);
  EXPECT_EQ(load_map(dir / "maps" / "m.json").width(), 160);
  EXPECT_EQ(run_cli("mapgen --kind outdoor --stage 9 --out " + (dir / "maps" / "x").string()), 2);
  EXPECT_EQ(run_cli("task --mode random --runs 2 --pedestrians 1 --timeout 1 -q --out " + (dir / "task").string()), 0);
  EXPECT_EQ(count_files(dir / "task", ".jsonl"), 2u);
  EXPECT_EQ(run_cli("task --mode scenario --runs 1 --timeout 1 -q --scenario " + scenario.string() +
                    " --planner nope --out " + (dir / "task2").string()),
            2);
}

TEST(Cli, BenchSeedChangesCampaignRecords) {
  const auto dir = fixture::scratch_dir("cliseed");
  fixture::write_scenario(dir, fixture::crossing(3), "crossing");
  std::ofstream(dir / "c.json") << R"({"name":"c","output":"out","seed":1,"runs_per_scenario":1,"timeout":2,)"
                                   R"("cells":[{"scenario":"crossing.json"}]})";
  const auto record = dir / "out" / "c" / "crossing" / "turtlebot3" / "dwa" / "run_0.jsonl";
  ASSERT_EQ(run_cli("run -q --config " + (dir / "c.json").string()), 0);
  EXPECT_EQ(load_episode(record).meta.seed, episode_seed(load_campaign(dir / "c.json", false),
                                                          prepare_campaign(load_campaign(dir / "c.json", false)).groups[0], 0));
  const std::string env_run = "BENCH_SEED=77 " + std::string(NAVBENCH_BENCH_CLI) + " run -q --config " +
                              (dir / "c.json").string() + " >/dev/null 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(env_run.c_str())), 0);
  auto cfg77 = load_campaign(dir / "c.json", false);
  cfg77.seed = 77;
  EXPECT_EQ(load_episode(record).meta.seed, episode_seed(cfg77, prepare_campaign(cfg77).groups[0], 0));
}
