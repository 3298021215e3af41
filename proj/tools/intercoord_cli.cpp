#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "intercoord/optimizer.hpp"
#include "intercoord/selector.hpp"
#include "intercoord/simulator.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using namespace intercoord;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kUnsafe = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << content;
}

double rounded(double x) {
  const double r = std::round(x * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

json parse_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

int simulate(const std::string& scenario_path, const std::string& out_dir,
             const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
  if (scenario_path.empty()) throw UsageError("simulate needs --scenario");
  Scenario scenario = load_scenario(scenario_path);
  for (const auto& o : overrides) apply_override(scenario, o);
  if (seed) scenario.seed = *seed;

  const SimResult result = run(scenario);
  const IntersectionModel model = build_intersection(scenario.geometry);
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "trajectories.csv", trajectories_csv(result, model));
  write_file(fs::path(out_dir) / "metrics.json", metrics_json(result, scenario, model));
  write_file(fs::path(out_dir) / "timings.json", timings_json(result));

  std::fprintf(stderr, "%zu vehicles, %zu rounds, makespan %.3f s\n", result.vehicles.size(),
               result.rounds.size(), result.makespan);
  if (!result.violations.empty() || !result.window_conflicts.empty()) {
    std::fprintf(stderr, "safety: %zu sampled violations, %zu window overlaps\n",
                 result.violations.size(), result.window_conflicts.size());
    return kUnsafe;
  }
  if (!result.completed) {
    std::fprintf(stderr, "not every vehicle cleared the intersection within %.1f s\n",
                 scenario.horizon);
    return kInfeasible;
  }
  return kOk;
}

int solve_instance(const std::string& path, const std::string& out_dir) {
  if (path.empty()) throw UsageError("solve needs --instance");
  const json doc = parse_json(path);
  std::vector<ConflictInput> conflicts;
  std::size_t n = 0;
  VelocityBounds bounds;
  try {
    n = doc.at("n").get<std::size_t>();
    bounds.v_min = doc.value("v_min", bounds.v_min);
    bounds.v_max = doc.value("v_max", bounds.v_max);
    for (const auto& c : doc.at("conflicts")) {
      conflicts.push_back({c.at("i").get<std::size_t>(), c.at("j").get<std::size_t>(),
                           c.at("l_i").get<double>(), c.at("l_j").get<double>(),
                           c.at("l_enter").get<double>(), c.at("l_safe").get<double>()});
    }
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  MilpProblem problem;
  try {
    problem = assemble(conflicts, n, bounds);
  } catch (const AssemblyError& e) {
    throw UsageError(path + ": " + e.what());
  }
  const MilpSolution sol = solve(problem);

  ordered_json out;
  const bool ok = sol.status == MilpStatus::optimal;
  out["status"] = ok ? "optimal" : "infeasible";
  std::vector<double> v;
  for (double x : sol.velocities) v.push_back(rounded(x));
  out["velocities"] = v;
  out["binaries"] = sol.binaries;
  out["objective"] = ok ? json(rounded(sol.objective)) : json(nullptr);
  out["nodes"] = sol.nodes;
  out["lp_solves"] = sol.lp_solves;
  out["solve_time"] = sol.solve_time;
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "solution.json", text);
  }
  return ok ? kOk : kInfeasible;
}

int select_instance(const std::string& path) {
  if (path.empty()) throw UsageError("select needs --instance");
  const json doc = parse_json(path);
  std::vector<double> velocities;
  double v_max = 0.0;
  std::vector<std::vector<int>> rows;
  try {
    velocities = doc.at("velocities").get<std::vector<double>>();
    v_max = doc.at("v_max").get<double>();
    rows = doc.at("priority").get<std::vector<std::vector<int>>>();
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  const std::size_t n = velocities.size();
  if (rows.size() != n) throw UsageError(path + ": priority must be " + std::to_string(n) + " x " + std::to_string(n));
  PriorityMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw UsageError(path + ": priority row " + std::to_string(i) + " has the wrong length");
    for (std::size_t j = 0; j < n; ++j) s.set(i, j, rows[i][j]);
  }
  std::vector<std::string> labels;
  if (doc.contains("labels")) labels = doc["labels"].get<std::vector<std::string>>();
  const PriorityGraph g(velocities, s, v_max);
  const FlagVector flags = extract_subset(g);
  std::cout << "FLAG";
  for (int f : flags) std::cout << ' ' << f;
  std::cout << "\n" << to_dot(g, flags, labels);
  return kOk;
}

int report(const std::string& dir) {
  if (dir.empty()) throw UsageError("report needs --out-dir holding metrics.json");
  const json metrics = parse_json((fs::path(dir) / "metrics.json").string());
  std::vector<double> ms;
  const fs::path timings = fs::path(dir) / "timings.json";
  if (fs::exists(timings)) ms = parse_json(timings.string()).at("solve_times_ms").get<std::vector<double>>();

  std::printf("scenario       %s\n", metrics.value("scenario", std::string("?")).c_str());
  std::printf("vehicles       %zu\n", metrics.value("vehicles", std::size_t{0}));
  std::printf("completed      %s\n", metrics.value("completed", false) ? "yes" : "no");
  std::printf("makespan       %.3f s\n", metrics.value("makespan", 0.0));
  std::printf("rounds         %zu (%zu aborted, %zu infeasible)\n", metrics.value("rounds", std::size_t{0}),
              metrics.value("aborted_rounds", std::size_t{0}),
              metrics.value("infeasible_rounds", std::size_t{0}));
  std::printf("violations     %zu\n", metrics.value("violations", json::array()).size());
  if (!ms.empty()) {
    const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    std::vector<double> sorted = ms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1;
    std::printf("solve time     mean %.3f ms, p95 %.3f ms over %zu solves\n", mean, sorted[k], ms.size());
  } else {
    std::printf("solve time     no timings.json\n");
  }
  std::map<std::size_t, std::size_t> histogram;
  for (std::size_t s : metrics.value("subset_sizes", std::vector<std::size_t>{})) ++histogram[s];
  std::printf("subset sizes\n");
  for (const auto& [size, count] : histogram) {
    std::printf("  %zu  %4zu  %s\n", size, count, std::string(count, '#').c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-level intersection coordination"};
  app.require_subcommand(1);
  std::string scenario_path, instance_path, out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate", "run a scenario and write trajectories and metrics");
  sim->add_option("--scenario", scenario_path, "scenario JSON file");
  sim->add_option("--out-dir", out_dir, "output directory")->default_val("out");
  sim->add_option("--set", overrides, "override a scenario field, key=value");
  sim->add_option("--seed", seed, "override the scenario seed");

  auto* slv = app.add_subcommand("solve", "solve one velocity MILP instance");
  slv->add_option("--instance", instance_path, "instance JSON file");
  slv->add_option("--out-dir", out_dir, "also write solution.json here");

  auto* sel = app.add_subcommand("select", "extract a subset from velocities and priorities");
  sel->add_option("--instance", instance_path, "selection JSON file");

  auto* rep = app.add_subcommand("report", "summarize a simulate output directory");
  rep->add_option("--out-dir", out_dir, "directory with metrics.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return simulate(scenario_path, out_dir, overrides, seed);
    if (*slv) return solve_instance(instance_path, out_dir);
    if (*sel) return select_instance(instance_path);
    if (*rep) return report(out_dir);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), app.help().c_str());
    return kUsage;
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInfeasible;
  }
  return kUsage;
}
