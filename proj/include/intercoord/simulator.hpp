#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "intercoord/geometry.hpp"
#include "intercoord/optimizer.hpp"
#include "intercoord/planner.hpp"
#include "intercoord/scenario.hpp"
#include "intercoord/selector.hpp"

namespace intercoord {

enum class VehicleStatus { waiting, pending, committed, done };

struct CrossingWindow {
  std::size_t conflict = 0;
  double entry = 0.0;
  double exit = 0.0;
};

struct VehicleState {
  std::size_t id = 0;
  std::size_t movement = 0;
  double depart_time = 0.0;
  double spawn_time = std::numeric_limits<double>::quiet_NaN();
  double initial_speed = 0.0;
  double arc_position = 0.0;
  double speed = 0.0;
  VehicleStatus status = VehicleStatus::waiting;

  std::optional<VelocityProfile> profile;
  double profile_origin = 0.0;  // arc position at the profile's start time
  std::size_t round = 0;        // round that committed this vehicle
  std::vector<CrossingWindow> windows;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
};

enum class RoundOutcome { committed, infeasible, planning_failed, empty_subset };

struct RoundRecord {
  std::size_t index = 0;
  double time = 0.0;
  bool fallback = false;
  RoundOutcome outcome = RoundOutcome::committed;
  std::string message;
  std::vector<std::optional<std::size_t>> lane_vehicle;  // candidate per lane
  std::vector<std::size_t> dropped;  // candidates removed to make the MILP feasible
  std::size_t milp_variables = 0;
  std::vector<double> velocities;
  std::vector<int> binaries;
  std::vector<int> priority;  // row-major lane x lane
  FlagVector flags;
  std::vector<std::size_t> members;  // committed vehicle ids
  double delay = 0.0;
  std::size_t rescales = 0;
  double solve_seconds = 0.0;
  std::size_t lp_solves = 0;
};

struct TrajectoryRow {
  double t = 0.0;
  std::size_t vehicle = 0;
  std::size_t movement = 0;
  double arc_position = 0.0;
  double speed = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Violation {
  double t = 0.0;
  std::size_t vehicle_a = 0;
  std::size_t vehicle_b = 0;
  std::size_t conflict = 0;
};

struct SimResult {
  std::vector<TrajectoryRow> trajectories;
  std::vector<VehicleState> vehicles;
  std::vector<RoundRecord> rounds;
  double makespan = 0.0;
  double end_time = 0.0;
  bool completed = false;
  std::vector<Violation> violations;        // sampled trajectories
  std::vector<Violation> window_conflicts;  // exact planned windows

  std::vector<std::size_t> subset_sizes() const;
  std::vector<double> solve_times() const;
  std::vector<std::size_t> rescale_counts() const;
  std::size_t infeasible_rounds() const;
  std::size_t aborted_rounds() const;
};

/// Fixed-step world. Each tick: spawn, coordinate if due, record, advance.
class World {
 public:
  explicit World(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const IntersectionModel& model() const { return model_; }
  double time() const { return static_cast<double>(tick_) * scenario_.dt; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  const std::vector<double>& last_leave() const { return last_leave_; }

  void spawn();
  bool round_due() const;
  // Runs one round when due; returns its record.
  std::optional<RoundRecord> coordination_round();
  void record(std::vector<TrajectoryRow>& rows) const;
  void step();
  bool finished() const;

  double l_enter() const { return model_.l_enter(scenario_.vehicle_length); }
  double l_safe() const { return model_.l_safe(scenario_.vehicle_length); }

 private:
  double stop_arc(std::size_t movement) const;
  PlannerParams planner_params() const;
  std::vector<std::optional<std::size_t>> candidates() const;

  Scenario scenario_;
  IntersectionModel model_;
  std::vector<VehicleState> vehicles_;
  std::vector<std::vector<std::size_t>> lanes_;  // vehicle ids per movement, in order
  std::vector<double> last_leave_;
  std::vector<double> exit_arc_;
  std::vector<RoundRecord> rounds_;
  std::size_t tick_ = 0;
  std::size_t next_departure_ = 0;
  double ramps_done_at_ = -std::numeric_limits<double>::infinity();
  bool fallback_next_ = false;
};

SimResult run(const Scenario& scenario);

/// Pairs on the two movements of a conflict point that are inside its window
/// at the same sampled instant.
std::vector<Violation> check_safety(const std::vector<TrajectoryRow>& rows,
                                    const IntersectionModel& model, double l_enter,
                                    double l_safe, double tol = 1e-6);

/// Overlapping planned windows at any conflict point.
std::vector<Violation> audit_windows(const std::vector<VehicleState>& vehicles,
                                     const IntersectionModel& model, double tol = 1e-6);

std::string trajectories_csv(const SimResult& result, const IntersectionModel& model);
std::string metrics_json(const SimResult& result, const Scenario& scenario,
                         const IntersectionModel& model);
std::string timings_json(const SimResult& result);

}  // namespace intercoord
