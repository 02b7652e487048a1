// navbench command line: campaigns, evaluation, map generation, scenario tools.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration/validation error,
// 3 at least one episode ended with a planner error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "navbench/bench/campaign.hpp"
#include "navbench/bench/episode.hpp"
#include "navbench/mapgen/map_generator.hpp"
#include "navbench/metrics/metrics.hpp"
#include "navbench/task/scenario.hpp"
#include "navbench/task/task.hpp"
#include "navbench/world/map_io.hpp"

namespace fs = std::filesystem;
using namespace navbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPlannerError = 3;

void write_or_print(const std::optional<fs::path>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  if (path->has_parent_path()) fs::create_directories(path->parent_path());
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path->string());
  out << text;
}

int cmd_run(const fs::path& config, std::optional<int> parallelism, bool quiet) {
  CampaignConfig cfg = load_campaign(config);
  if (parallelism) cfg.parallelism = *parallelism;
  ProgressFn progress;
  if (!quiet) progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const CampaignResult r = run_campaign(cfg, progress);
  std::cerr << "campaign " << cfg.name << ": " << r.executed << " episodes run, " << r.skipped
            << " resumed, " << r.planner_errors << " planner errors, " << r.failures.size()
            << " setup failures\n";
  for (const auto& f : r.failures) std::cerr << "  failed: " << f << "\n";
  std::cout << (r.root / "metrics.csv").lexically_normal().string() << "\n";
  return r.exit_code();
}

int cmd_eval(const fs::path& records, const std::optional<fs::path>& csv, const std::optional<fs::path>& json) {
  const auto reports = evaluate_directory(records);
  if (reports.empty()) throw ConfigError("no .jsonl records under " + records.string());
  const auto groups = aggregate(reports);
  write_or_print(csv, to_csv(groups));
  if (json) {
    nlohmann::json j;
    j["episodes"] = nlohmann::json::array();
    for (const auto& r : reports) j["episodes"].push_back(to_json(r));
    j["groups"] = nlohmann::json::array();
    for (const auto& g : groups) j["groups"].push_back(to_json(g));
    write_or_print(json, j.dump(2) + "\n");
  }
  bool planner_error = false;
  for (const auto& r : reports) planner_error |= r.status == EpisodeStatus::planner_error;
  return planner_error ? kExitPlannerError : kExitOk;
}

int cmd_mapgen(MapGenConfig cfg, const fs::path& out) {
  cfg.validate();
  const GeneratedMap m = generate_map(cfg);
  save_map(m.grid, out);
  nlohmann::json j = to_json(cfg);
  j["free_fraction"] = m.report.free_fraction;
  j["components"] = m.report.components;
  j["obstacles"] = m.report.obstacles;
  j["largest_component_fraction"] = m.report.largest_component_fraction;
  std::cout << j.dump() << "\n";
  return kExitOk;
}

int cmd_validate(const fs::path& scenario) {
  const Scenario s = load_scenario(scenario, true);
  std::cout << "ok: " << s.name << " (" << s.pedestrians.size() << " pedestrians, map " << s.map.label()
            << ")\n";
  return kExitOk;
}

int cmd_sample(const std::optional<fs::path>& map_file, const MapGenConfig& gen, const std::string& robot,
               int pedestrians, double speed, std::uint64_t seed, const std::optional<fs::path>& out) {
  MapRef ref;
  if (map_file) {
    ref.file = map_file->string();
  } else {
    ref.generate = gen;
  }
  const OccupancyGrid grid = resolve_map(ref);
  TaskConfig tc;
  tc.robot = robot;
  tc.obstacle_count = pedestrians;
  tc.pedestrian_speed = speed;
  Rng rng(derive_seed({seed, 3}));
  Scenario s = sample_random_task(grid, tc, rng, ref);
  s.name = ref.label() + "_seed" + std::to_string(seed);
  s.seed = seed;
  s.crowd_mode = CrowdMode::loop;
  if (out && map_file) {
    // Keep the map reference valid relative to the scenario file.
    s.map.file = fs::relative(fs::absolute(*map_file), fs::absolute(*out).parent_path()).string();
  }
  write_or_print(out, to_json(s).dump(2) + "\n");
  return kExitOk;
}

struct TaskArgs {
  std::string mode = "scenario";
  std::optional<fs::path> scenario;
  std::optional<fs::path> map;
  MapGenConfig gen;
  std::optional<std::string> robot;
  std::string planner = "dwa";
  int runs = kDefaultRunsPerScenario;
  std::uint64_t seed = 0;
  double timeout = 60.0;
  std::optional<int> pedestrians;
  double speed = 0.3;
  int parallelism = 1;
  int deadline_ms = 100;
  fs::path out = "out";
  bool quiet = false;
};

// Runs one task source as a single-cell campaign so records, resume and
// reports behave exactly as under `run`.
int cmd_task(const TaskArgs& a) {
  CampaignConfig cfg;
  cfg.name = "task";
  cfg.output = a.out;
  cfg.seed = a.seed;
  cfg.timeout = a.timeout;
  cfg.parallelism = a.parallelism;
  cfg.planner_deadline = std::chrono::milliseconds(a.deadline_ms);
  CellConfig cell;
  cell.mode = task_mode_from_string(a.mode);
  cell.planners = {a.planner};
  cell.runs = a.runs;
  cell.pedestrian_speed = a.speed;
  if (a.robot) cell.robots = {*a.robot};
  if (a.pedestrians) cell.obstacle_counts = {*a.pedestrians};
  switch (cell.mode) {
    case TaskMode::scenario:
      if (!a.scenario) throw ConfigError("task --mode scenario needs --scenario");
      cell.scenario = *a.scenario;
      cell.name = a.scenario->stem().string();
      break;
    case TaskMode::random: {
      MapRef ref;
      if (a.map) {
        ref.file = a.map->string();
      } else {
        ref.generate = a.gen;
      }
      cell.name = ref.label();
      cell.map = ref;
      break;
    }
    case TaskMode::staged:
      cell.curriculum = default_curriculum(a.gen);
      cell.name = "staged";
      break;
  }
  cfg.cells.push_back(std::move(cell));
  apply_bench_seed(cfg);
  ProgressFn progress;
  if (!a.quiet) progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const CampaignResult r = run_campaign(cfg, progress);
  std::cout << to_csv(r.summary);
  for (const auto& f : r.failures) std::cerr << "  failed: " << f << "\n";
  return r.exit_code();
}

int cmd_episode(const fs::path& scenario_path, const std::string& planner, std::optional<std::string> robot_name,
                std::uint64_t seed, double timeout, int deadline_ms, const std::optional<fs::path>& out) {
  Scenario s = load_scenario(scenario_path, true);
  if (robot_name) s.robot.spec = *robot_name;
  const OccupancyGrid grid = resolve_map(s.map, scenario_path.parent_path());
  validate_scenario(s, grid);
  EpisodeOptions opt;
  opt.timeout = timeout;
  PlannerOptions popt;
  popt.deadline = std::chrono::milliseconds(deadline_ms);
  const auto rec = run_episode(s, grid, resolve_robot(s.robot.spec), planner, seed, opt, {}, popt);
  if (out) save_episode(rec, *out);
  std::cout << to_json(evaluate(rec)).dump(2) << "\n";
  return rec.status() == EpisodeStatus::planner_error ? kExitPlannerError : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"navbench: deterministic 2D navigation benchmark"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run (or resume) a benchmark campaign");
  fs::path run_config;
  std::optional<int> run_parallelism;
  bool run_quiet = false;
  run->add_option("--config", run_config, "Campaign JSON file")->required();
  run->add_option("-j,--parallelism", run_parallelism, "Override the worker count");
  run->add_flag("-q,--quiet", run_quiet, "No per-episode progress");

  auto* eval = app.add_subcommand("eval", "Score episode records and print the summary CSV");
  fs::path eval_records;
  std::optional<fs::path> eval_csv, eval_json;
  eval->add_option("--records", eval_records, "Directory searched recursively for .jsonl records")->required();
  eval->add_option("--csv", eval_csv, "Write the CSV here instead of stdout");
  eval->add_option("--json", eval_json, "Also write per-episode and per-group JSON here");

  auto* mapgen = app.add_subcommand("mapgen", "Generate a map (writes STEM.pgm and STEM.json)");
  MapGenConfig gen;
  std::string gen_kind = "outdoor";
  fs::path gen_out;
  mapgen->add_option("--kind", gen_kind, "indoor or outdoor")->check(CLI::IsMember({"indoor", "outdoor"}));
  mapgen->add_option("--stage", gen.stage, "Difficulty stage (1-based)");
  mapgen->add_option("--seed", gen.seed, "Generator seed");
  std::optional<double> gen_size;
  mapgen->add_option("--size", gen_size, "Side length of a square map, m");
  mapgen->add_option("--width", gen.width, "Width in meters")->excludes("--size");
  mapgen->add_option("--height", gen.height, "Height in meters")->excludes("--size");
  mapgen->add_option("--resolution", gen.resolution, "Meters per cell");
  mapgen->add_option("--out", gen_out, "Output path stem")->required();

  auto* validate = app.add_subcommand("validate", "Check a scenario file against its map");
  fs::path val_scenario;
  validate->add_option("--scenario", val_scenario, "Scenario JSON file")->required();

  auto* task = app.add_subcommand("task", "Run episodes from one task source (scenario, random or staged)");
  TaskArgs ta;
  std::string task_kind = "outdoor";
  task->add_option("--mode", ta.mode, "scenario, random or staged")
      ->check(CLI::IsMember({"scenario", "random", "staged"}));
  task->add_option("--scenario", ta.scenario, "Scenario JSON file (scenario mode)");
  task->add_option("--map", ta.map, "Map file (random mode); otherwise a generated map");
  task->add_option("--kind", task_kind, "Generated map kind")->check(CLI::IsMember({"indoor", "outdoor"}));
  task->add_option("--size", ta.gen.width, "Generated map side length, m");
  task->add_option("--stage", ta.gen.stage, "Generated map stage (random mode)");
  task->add_option("--map-seed", ta.gen.seed, "Generated map seed");
  task->add_option("--robot", ta.robot, "Robot name or spec file");
  task->add_option("--planner", ta.planner, "dwa, teleport-oracle, extern:cmd=\"...\" or extern:tcp=host:port");
  task->add_option("--runs", ta.runs, "Episodes to run")->check(CLI::PositiveNumber);
  task->add_option("--seed", ta.seed, "Global seed (BENCH_SEED overrides)");
  task->add_option("--timeout", ta.timeout, "Simulated seconds per episode");
  task->add_option("--pedestrians", ta.pedestrians, "Pedestrian count")->check(CLI::NonNegativeNumber);
  task->add_option("--speed", ta.speed, "Pedestrian desired speed, m/s");
  task->add_option("-j,--parallelism", ta.parallelism, "Worker count")->check(CLI::PositiveNumber);
  task->add_option("--deadline-ms", ta.deadline_ms, "External planner deadline per tick");
  task->add_option("--out", ta.out, "Output root; records go to OUT/task/...");
  task->add_flag("-q,--quiet", ta.quiet, "No per-episode progress");

  auto* sample = app.add_subcommand("sample", "Sample a random task and print it as a scenario");
  std::optional<fs::path> sample_map, sample_out;
  MapGenConfig sample_gen;
  std::string sample_kind = "outdoor", sample_robot = "turtlebot3";
  int sample_peds = 0;
  double sample_speed = 0.3;
  std::uint64_t sample_seed = 0;
  sample->add_option("--map", sample_map, "Map file (.json or .pgm); otherwise a generated map");
  sample->add_option("--kind", sample_kind, "Generated map kind")->check(CLI::IsMember({"indoor", "outdoor"}));
  sample->add_option("--size", sample_gen.width, "Generated map side length, m");
  sample->add_option("--stage", sample_gen.stage, "Generated map stage");
  sample->add_option("--map-seed", sample_gen.seed, "Generated map seed");
  sample->add_option("--robot", sample_robot, "Robot name or spec file");
  sample->add_option("--pedestrians", sample_peds, "Number of pedestrians")->check(CLI::NonNegativeNumber);
  sample->add_option("--speed", sample_speed, "Pedestrian desired speed, m/s");
  sample->add_option("--seed", sample_seed, "Task seed");
  sample->add_option("--out", sample_out, "Write the scenario here instead of stdout");

  auto* episode = app.add_subcommand("episode", "Run a single scenario episode and print its metrics");
  fs::path ep_scenario;
  std::string ep_planner = "dwa";
  std::optional<std::string> ep_robot;
  std::uint64_t ep_seed = 0;
  double ep_timeout = 60.0;
  int ep_deadline = 100;
  std::optional<fs::path> ep_out;
  episode->add_option("--scenario", ep_scenario, "Scenario JSON file")->required();
  episode->add_option("--planner", ep_planner, "dwa, teleport-oracle, extern:cmd=\"...\" or extern:tcp=host:port");
  episode->add_option("--robot", ep_robot, "Override the scenario robot");
  episode->add_option("--seed", ep_seed, "Episode seed");
  episode->add_option("--timeout", ep_timeout, "Simulated seconds");
  episode->add_option("--deadline-ms", ep_deadline, "External planner deadline per tick");
  episode->add_option("--out", ep_out, "Write the episode record (JSON-Lines) here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_config, run_parallelism, run_quiet);
    if (*eval) return cmd_eval(eval_records, eval_csv, eval_json);
    if (*mapgen) {
      gen.kind = map_kind_from_string(gen_kind);
      if (gen_size) gen.width = gen.height = *gen_size;
      return cmd_mapgen(gen, gen_out);
    }
    if (*validate) return cmd_validate(val_scenario);
    if (*task) {
      ta.gen.kind = map_kind_from_string(task_kind);
      ta.gen.height = ta.gen.width;
      return cmd_task(ta);
    }
    if (*sample) {
      sample_gen.kind = map_kind_from_string(sample_kind);
      sample_gen.height = sample_gen.width;
      return cmd_sample(sample_map, sample_gen, sample_robot, sample_peds, sample_speed, sample_seed, sample_out);
    }
    if (*episode) return cmd_episode(ep_scenario, ep_planner, ep_robot, ep_seed, ep_timeout, ep_deadline, ep_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GenerationError& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
