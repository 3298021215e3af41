#include "intercoord/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "json.hpp"

namespace intercoord {
namespace {

using ordered_json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;

double round6(double x) {
  const double r = std::round(x * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no negative zero in the output
}

const char* outcome_name(RoundOutcome o) {
  switch (o) {
    case RoundOutcome::committed: return "committed";
    case RoundOutcome::infeasible: return "infeasible";
    case RoundOutcome::planning_failed: return "planning_failed";
    case RoundOutcome::empty_subset: return "empty_subset";
  }
  return "unknown";
}

}  // namespace

std::vector<std::size_t> SimResult::subset_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& r : rounds) {
    if (r.outcome == RoundOutcome::committed) out.push_back(r.members.size());
  }
  return out;
}

std::vector<double> SimResult::solve_times() const {
  std::vector<double> out;
  for (const auto& r : rounds) {
    if (r.milp_variables > 0) out.push_back(r.solve_seconds);
  }
  return out;
}

std::vector<std::size_t> SimResult::rescale_counts() const {
  std::vector<std::size_t> out;
  for (const auto& r : rounds) {
    if (r.outcome == RoundOutcome::committed) out.push_back(r.rescales);
  }
  return out;
}

std::size_t SimResult::infeasible_rounds() const {
  return static_cast<std::size_t>(std::count_if(rounds.begin(), rounds.end(), [](const auto& r) {
    return r.outcome == RoundOutcome::infeasible;
  }));
}

std::size_t SimResult::aborted_rounds() const {
  return static_cast<std::size_t>(std::count_if(rounds.begin(), rounds.end(), [](const auto& r) {
    return r.outcome != RoundOutcome::committed;
  }));
}

World::World(Scenario scenario)
    : scenario_(std::move(scenario)), model_(build_intersection(scenario_.geometry)) {
  validate(scenario_);
  std::vector<std::size_t> order(scenario_.departures.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scenario_.departures[a].time < scenario_.departures[b].time;
  });

  std::mt19937_64 rng(scenario_.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  lanes_.resize(model_.size());
  for (std::size_t k : order) {
    const auto& d = scenario_.departures[k];
    VehicleState v;
    v.id = vehicles_.size();
    v.movement = *model_.index_of(d.movement);
    v.depart_time = d.time;
    double v0 = d.v0 ? *d.v0 : scenario_.v0_default;
    if (!d.v0 && scenario_.v0_jitter > 0.0) v0 += scenario_.v0_jitter * jitter(rng);
    v.initial_speed = std::clamp(v0, 0.0, scenario_.v_max);
    vehicles_.push_back(v);
  }
  last_leave_.assign(model_.conflicts().size(), -kInf);
  for (std::size_t m = 0; m < model_.size(); ++m) {
    exit_arc_.push_back(model_.exit_arc(m, scenario_.vehicle_length));
  }
}

double World::stop_arc(std::size_t movement) const {
  double first = model_.movement(movement).approach_length();
  for (std::size_t k : model_.conflicts_of(movement)) {
    first = std::min(first, model_.conflicts()[k].s_of(movement));
  }
  return first - l_enter() - scenario_.stop_buffer;
}

PlannerParams World::planner_params() const {
  PlannerParams p;
  p.a_max = scenario_.a_max;
  p.k_rescale = scenario_.k_rescale;
  p.max_rescales = static_cast<std::size_t>(scenario_.max_rescales);
  p.min_speed = scenario_.min_speed;
  p.ramp_stretch = scenario_.ramp_stretch;
  return p;
}

void World::spawn() {
  const double t = time();
  const double clearance = scenario_.vehicle_length + scenario_.jam_gap;
  std::vector<bool> blocked(model_.size(), false);
  for (auto& v : vehicles_) {
    if (v.status != VehicleStatus::waiting) continue;
    if (v.depart_time > t + kTimeEps) break;
    // Later departures on a blocked lane wait too, keeping lane order.
    if (blocked[v.movement]) continue;
    const auto& lane = lanes_[v.movement];
    if (!lane.empty() && vehicles_[lane.back()].arc_position < clearance) {
      blocked[v.movement] = true;
      continue;
    }
    v.status = VehicleStatus::pending;
    v.spawn_time = t;
    v.arc_position = 0.0;
    v.speed = v.initial_speed;
    lanes_[v.movement].push_back(v.id);
  }
  while (next_departure_ < vehicles_.size() &&
         vehicles_[next_departure_].status != VehicleStatus::waiting) {
    ++next_departure_;
  }
}

std::vector<std::optional<std::size_t>> World::candidates() const {
  std::vector<std::optional<std::size_t>> out(model_.size());
  for (std::size_t m = 0; m < model_.size(); ++m) {
    for (std::size_t id : lanes_[m]) {
      const auto& v = vehicles_[id];
      if (v.status != VehicleStatus::pending) continue;
      const double to_center = model_.movement(m).approach_length() - v.arc_position;
      if (to_center <= scenario_.coordination_radius) out[m] = id;
      break;
    }
  }
  return out;
}

bool World::round_due() const {
  if (time() < ramps_done_at_ - kTimeEps) return false;
  for (const auto& c : candidates()) {
    if (c) return true;
  }
  return false;
}

std::optional<RoundRecord> World::coordination_round() {
  if (!round_due()) return std::nullopt;
  const double t = time();
  const std::size_t n = model_.size();
  RoundRecord rec;
  rec.index = rounds_.size();
  rec.time = t;
  rec.lane_vehicle = candidates();
  rec.fallback = fallback_next_;

  if (fallback_next_) {
    // One vehicle at a time: the one closest to the center.
    std::optional<std::size_t> best;
    double best_d = kInf;
    for (std::size_t m = 0; m < n; ++m) {
      if (!rec.lane_vehicle[m]) continue;
      const double d = model_.movement(m).approach_length() - vehicles_[*rec.lane_vehicle[m]].arc_position;
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    for (std::size_t m = 0; m < n; ++m) {
      if (m != best) rec.lane_vehicle[m].reset();
    }
  }

  auto abort_round = [&](RoundOutcome outcome, std::string message) {
    rec.outcome = outcome;
    rec.message = std::move(message);
    fallback_next_ = true;
    rounds_.push_back(rec);
    return rounds_.back();
  };

  auto to_center = [&](std::size_t m) {
    return model_.movement(m).approach_length() - vehicles_[*rec.lane_vehicle[m]].arc_position;
  };

  // An infeasible MILP drops the candidate farthest from the center and
  // solves again; a lone candidate is always feasible.
  MilpProblem problem;
  MilpSolution sol;
  for (;;) {
    std::vector<ConflictInput> inputs;
    for (const auto& cp : model_.conflicts()) {
      const auto& a = rec.lane_vehicle[cp.first];
      const auto& b = rec.lane_vehicle[cp.second];
      ConflictInput in{cp.first, cp.second,
                       a ? cp.s_first - vehicles_[*a].arc_position : kInf,
                       b ? cp.s_second - vehicles_[*b].arc_position : kInf, l_enter(), l_safe()};
      // Ties between equal objectives resolve to binary 0, which lets the
      // second lane go first; make that the vehicle nearer the point.
      if (in.l_i < in.l_j) {
        std::swap(in.i, in.j);
        std::swap(in.l_i, in.l_j);
      }
      inputs.push_back(in);
    }
    std::optional<std::string> failure;
    try {
      problem = assemble(inputs, n, {scenario_.v_min, scenario_.v_max});
      sol = solve(problem);
      rec.milp_variables = problem.n_variables();
      rec.solve_seconds += sol.solve_time;
      rec.lp_solves += sol.lp_solves;
      if (sol.status != MilpStatus::optimal) failure = "no priority assignment is feasible";
    } catch (const AssemblyError& e) {
      failure = e.what();
    }
    if (!failure) break;

    std::optional<std::size_t> farthest;
    std::size_t present = 0;
    for (std::size_t m = 0; m < n; ++m) {
      if (!rec.lane_vehicle[m]) continue;
      ++present;
      if (!farthest || to_center(m) > to_center(*farthest)) farthest = m;
    }
    if (present <= 1) return abort_round(RoundOutcome::infeasible, *failure);
    rec.dropped.push_back(*rec.lane_vehicle[*farthest]);
    rec.lane_vehicle[*farthest].reset();
  }
  rec.velocities = sol.velocities;
  rec.binaries = sol.binaries;
  const PriorityMatrix s = priority_matrix(sol, problem.conflict_index, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) rec.priority.push_back(s(i, j));
  }
  rec.flags = extract_subset(sol.velocities, s, scenario_.v_max);

  std::vector<std::size_t> lanes;
  PlanInput input;
  input.t_clock = t;
  input.last_leave = last_leave_;
  for (std::size_t m = 0; m < n; ++m) {
    if (!rec.lane_vehicle[m] || rec.flags[m] != 1) continue;
    const auto& v = vehicles_[*rec.lane_vehicle[m]];
    MemberInput mi;
    mi.initial_speed = v.speed;
    mi.target = sol.velocities[m];
    for (std::size_t k : model_.conflicts_of(m)) {
      mi.conflicts.push_back(
          {k, model_.conflicts()[k].s_of(m) - v.arc_position, l_enter(), l_safe()});
    }
    lanes.push_back(m);
    input.members.push_back(std::move(mi));
  }
  if (lanes.empty()) return abort_round(RoundOutcome::empty_subset, "no candidate was kept");

  PlanningResult planned;
  try {
    planned = plan(input, planner_params());
  } catch (const PlanningError& e) {
    return abort_round(RoundOutcome::planning_failed, e.what());
  }

  for (std::size_t q = 0; q < lanes.size(); ++q) {
    const std::size_t m = lanes[q];
    auto& v = vehicles_[*rec.lane_vehicle[m]];
    const auto& mp = planned.members[q];
    v.status = VehicleStatus::committed;
    v.profile = mp.profile;
    v.profile_origin = v.arc_position;
    v.round = rec.index;
    v.windows.clear();
    for (std::size_t c = 0; c < input.members[q].conflicts.size(); ++c) {
      const std::size_t k = input.members[q].conflicts[c].point;
      v.windows.push_back({k, mp.windows[c].entry, mp.windows[c].exit});
      last_leave_[k] = std::max(last_leave_[k], mp.windows[c].exit);
    }
    v.exit_time = mp.profile.time_at_distance(exit_arc_[m] - v.arc_position);
    ramps_done_at_ = std::max(ramps_done_at_, std::min(mp.profile.ramp_end(), v.exit_time));
    rec.members.push_back(v.id);
  }
  rec.delay = planned.delay;
  rec.rescales = planned.rescale_count;
  fallback_next_ = false;
  rounds_.push_back(rec);
  return rounds_.back();
}

void World::record(std::vector<TrajectoryRow>& rows) const {
  const double t = time();
  for (const auto& v : vehicles_) {
    if (v.status != VehicleStatus::pending && v.status != VehicleStatus::committed) continue;
    const Point2 p = model_.movement(v.movement).point_at(v.arc_position);
    rows.push_back({t, v.id, v.movement, v.arc_position, v.speed, p.x, p.y});
  }
}

void World::step() {
  const double dt = scenario_.dt;
  const double t_next = static_cast<double>(tick_ + 1) * dt;
  const double a = scenario_.a_max;
  for (std::size_t m = 0; m < model_.size(); ++m) {
    std::optional<double> leader_next;
    for (std::size_t id : lanes_[m]) {
      auto& v = vehicles_[id];
      if (v.profile) {
        const ProfileState s = v.profile->eval(t_next);
        v.arc_position = v.profile_origin + s.distance;
        v.speed = s.speed;
        if (v.status == VehicleStatus::committed && v.arc_position >= exit_arc_[m]) {
          v.status = VehicleStatus::done;
        }
      } else {
        double speed = v.speed;
        if (leader_next) {
          const double room = *leader_next - v.arc_position - scenario_.vehicle_length -
                              scenario_.jam_gap;
          speed = std::min(speed, std::max(0.0, room / (dt + scenario_.headway)));
        }
        const double to_stop = stop_arc(m) - v.arc_position;
        const double stop_cap = to_stop <= 0.0 ? 0.0 : std::min(std::sqrt(2.0 * a * to_stop), to_stop / dt);
        speed = std::min(speed, stop_cap);
        v.speed = speed;
        v.arc_position += speed * dt;
      }
      leader_next = v.arc_position;
    }
  }
  ++tick_;
}

bool World::finished() const {
  if (next_departure_ < vehicles_.size()) return false;
  return std::all_of(vehicles_.begin(), vehicles_.end(),
                     [](const auto& v) { return v.status == VehicleStatus::done; });
}

SimResult run(const Scenario& scenario) {
  World world(scenario);
  SimResult result;
  for (;;) {
    world.spawn();
    if (world.round_due()) world.coordination_round();
    world.record(result.trajectories);
    if (world.finished()) {
      result.completed = true;
      break;
    }
    if (world.time() >= scenario.horizon - kTimeEps) break;
    world.step();
  }
  result.end_time = world.time();
  result.vehicles = world.vehicles();
  result.rounds = world.rounds();
  for (const auto& v : result.vehicles) {
    if (v.status == VehicleStatus::done) result.makespan = std::max(result.makespan, v.exit_time);
  }
  result.violations = check_safety(result.trajectories, world.model(), world.l_enter(),
                                   world.l_safe());
  result.window_conflicts = audit_windows(result.vehicles, world.model());
  return result;
}

std::vector<Violation> check_safety(const std::vector<TrajectoryRow>& rows,
                                    const IntersectionModel& model, double l_enter,
                                    double l_safe, double tol) {
  std::vector<Violation> out;
  std::vector<std::vector<std::size_t>> by_movement(model.size());
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> reported;
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].t == rows[begin].t) ++end;
    for (auto& b : by_movement) b.clear();
    for (std::size_t r = begin; r < end; ++r) by_movement[rows[r].movement].push_back(r);

    for (std::size_t k = 0; k < model.conflicts().size(); ++k) {
      const auto& cp = model.conflicts()[k];
      auto inside = [&](const TrajectoryRow& row, double s) {
        return row.arc_position > s - l_enter + tol && row.arc_position < s + l_safe - tol;
      };
      for (std::size_t ra : by_movement[cp.first]) {
        if (!inside(rows[ra], cp.s_first)) continue;
        for (std::size_t rb : by_movement[cp.second]) {
          if (!inside(rows[rb], cp.s_second)) continue;
          const auto key = std::make_tuple(k, rows[ra].vehicle, rows[rb].vehicle);
          if (reported[key]) continue;
          reported[key] = true;
          out.push_back({rows[ra].t, rows[ra].vehicle, rows[rb].vehicle, k});
        }
      }
    }
    begin = end;
  }
  return out;
}

std::vector<Violation> audit_windows(const std::vector<VehicleState>& vehicles,
                                     const IntersectionModel& model, double tol) {
  std::vector<Violation> out;
  struct Entry {
    std::size_t vehicle;
    std::size_t movement;
    CrossingWindow w;
  };
  std::vector<std::vector<Entry>> at(model.conflicts().size());
  for (const auto& v : vehicles) {
    for (const auto& w : v.windows) at[w.conflict].push_back({v.id, v.movement, w});
  }
  for (std::size_t k = 0; k < at.size(); ++k) {
    for (std::size_t a = 0; a < at[k].size(); ++a) {
      for (std::size_t b = a + 1; b < at[k].size(); ++b) {
        const auto& x = at[k][a];
        const auto& y = at[k][b];
        if (x.movement == y.movement) continue;
        if (x.w.entry < y.w.exit - tol && y.w.entry < x.w.exit - tol) {
          out.push_back({std::max(x.w.entry, y.w.entry), x.vehicle, y.vehicle, k});
        }
      }
    }
  }
  return out;
}

std::string trajectories_csv(const SimResult& result, const IntersectionModel& model) {
  std::string out = "t,vehicle_id,movement,arc_position,speed,x,y\n";
  char buf[192];
  auto clean = [](double x, double scale) {
    const double r = std::round(x * scale) / scale;
    return r == 0.0 ? 0.0 : r;
  };
  for (const auto& r : result.trajectories) {
    std::snprintf(buf, sizeof buf, "%.3f,%zu,%s,%.4f,%.4f,%.4f,%.4f\n", clean(r.t, 1e3), r.vehicle,
                  model.movement(r.movement).id().c_str(), clean(r.arc_position, 1e4),
                  clean(r.speed, 1e4), clean(r.x, 1e4), clean(r.y, 1e4));
    out += buf;
  }
  return out;
}

std::string metrics_json(const SimResult& result, const Scenario& scenario,
                         const IntersectionModel& model) {
  auto violations = [&](const std::vector<Violation>& list) {
    ordered_json arr = ordered_json::array();
    for (const auto& v : list) {
      ordered_json o;
      o["t"] = round6(v.t);
      o["vehicles"] = {v.vehicle_a, v.vehicle_b};
      const auto& cp = model.conflicts()[v.conflict];
      o["conflict"] = v.conflict;
      o["movements"] = {model.movement(cp.first).id(), model.movement(cp.second).id()};
      arr.push_back(o);
    }
    return arr;
  };

  ordered_json doc;
  doc["scenario"] = scenario.name;
  doc["seed"] = scenario.seed;
  doc["completed"] = result.completed;
  doc["vehicles"] = result.vehicles.size();
  doc["makespan"] = round6(result.makespan);
  doc["end_time"] = round6(result.end_time);
  doc["lanes"] = model.size();
  doc["conflict_points"] = model.conflicts().size();
  doc["rounds"] = result.rounds.size();
  doc["subset_sizes"] = result.subset_sizes();
  doc["rescale_counts"] = result.rescale_counts();
  doc["infeasible_rounds"] = result.infeasible_rounds();
  doc["aborted_rounds"] = result.aborted_rounds();
  std::vector<std::size_t> vars, lps;
  for (const auto& r : result.rounds) {
    if (r.milp_variables == 0) continue;
    vars.push_back(r.milp_variables);
    lps.push_back(r.lp_solves);
  }
  doc["milp_variables"] = vars;
  doc["lp_solves"] = lps;
  doc["violations"] = violations(result.violations);
  doc["window_conflicts"] = violations(result.window_conflicts);

  ordered_json rounds = ordered_json::array();
  for (const auto& r : result.rounds) {
    ordered_json o;
    o["index"] = r.index;
    o["t"] = round6(r.time);
    o["outcome"] = outcome_name(r.outcome);
    o["fallback"] = r.fallback;
    ordered_json cand = ordered_json::array();
    for (const auto& c : r.lane_vehicle) {
      if (c) cand.push_back(*c);
      else cand.push_back(nullptr);
    }
    o["candidates"] = cand;
    std::vector<double> vel;
    for (double v : r.velocities) vel.push_back(round6(v));
    o["velocities"] = vel;
    o["binaries"] = r.binaries;
    o["flags"] = r.flags;
    o["members"] = r.members;
    o["delay"] = round6(r.delay);
    o["rescales"] = r.rescales;
    if (!r.message.empty()) o["message"] = r.message;
    rounds.push_back(o);
  }
  doc["round_log"] = rounds;

  ordered_json vehicles = ordered_json::array();
  for (const auto& v : result.vehicles) {
    ordered_json o;
    o["id"] = v.id;
    o["movement"] = model.movement(v.movement).id();
    o["depart"] = round6(v.depart_time);
    if (std::isnan(v.spawn_time)) o["spawn"] = nullptr;
    else o["spawn"] = round6(v.spawn_time);
    if (v.profile) {
      o["round"] = v.round;
      o["target"] = round6(v.profile->terminal_speed());
    } else {
      o["round"] = nullptr;
      o["target"] = nullptr;
    }
    if (std::isnan(v.exit_time)) o["exit"] = nullptr;
    else o["exit"] = round6(v.exit_time);
    vehicles.push_back(o);
  }
  doc["vehicle_log"] = vehicles;
  return doc.dump(2) + "\n";
}

std::string timings_json(const SimResult& result) {
  ordered_json doc;
  std::vector<double> ms;
  for (double s : result.solve_times()) ms.push_back(round6(s * 1e3));
  doc["solve_times_ms"] = ms;
  return doc.dump(2) + "\n";
}

}  // namespace intercoord
