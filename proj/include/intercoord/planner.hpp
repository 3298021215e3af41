#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace intercoord {

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannerParams {
  double a_max = 2.5;
  double k_rescale = 1.2;
  std::size_t max_rescales = 20;
  // An accelerating vehicle keeps a single gentle ramp while that ramp is at
  // most this many times the binding vehicle's full-rate ramp; beyond that
  // it dips at full rate instead, which absorbs the same delay sooner.
  double ramp_stretch = 2.0;
  // Lowest speed a dip may reach before it holds.
  double min_speed = 1.0;
};

struct ProfileSegment {
  double duration = 0.0;
  double start_speed = 0.0;
  double acceleration = 0.0;
};

struct ProfileState {
  double distance = 0.0;
  double speed = 0.0;
};

/// Piecewise constant-acceleration speed plan; constant terminal speed after
/// the last segment. Distances are measured from the position at start_time.
class VelocityProfile {
 public:
  VelocityProfile() = default;
  VelocityProfile(double start_time, double initial_speed, std::vector<ProfileSegment> segments);

  static VelocityProfile constant(double start_time, double speed);

  double start_time() const { return start_time_; }
  double initial_speed() const { return initial_speed_; }
  double terminal_speed() const { return terminal_speed_; }
  const std::vector<ProfileSegment>& segments() const { return segments_; }
  double ramp_duration() const { return ramp_duration_; }
  double ramp_end() const { return start_time_ + ramp_duration_; }
  double ramp_distance() const { return ramp_distance_; }
  double max_abs_acceleration() const;

  ProfileState eval(double t) const;
  // Earliest time at which the distance reaches `d`. Throws if never.
  double time_at_distance(double d) const;

 private:
  double start_time_ = 0.0;
  double initial_speed_ = 0.0;
  double terminal_speed_ = 0.0;
  std::vector<ProfileSegment> segments_;
  double ramp_duration_ = 0.0;
  double ramp_distance_ = 0.0;
};

ProfileState profile_eval(const VelocityProfile& profile, double t);

/// Profile whose distance deficit against constant motion at `target`
/// equals delay * target once the ramp is over.
VelocityProfile delayed_profile(double start_time, double initial_speed, double target,
                                double delay, double reference_ramp,
                                const PlannerParams& params);

struct SyncResult {
  std::vector<VelocityProfile> profiles;
  std::vector<double> t_acc;
  double delay = 0.0;           // common virtual delay
  double reference_ramp = 0.0;  // binding vehicle's full-rate ramp time
  std::size_t binding = 0;      // index of the binding vehicle, size() if none
};

/// Ramps after which every member is at distance target * (t - t_clock - delay).
/// `delay_scale` multiplies the minimal common delay.
SyncResult sync_accel_times(const std::vector<double>& targets,
                            const std::vector<double>& initial_speeds, double t_clock,
                            const PlannerParams& params, double delay_scale = 1.0);

struct Occupancy {
  double entry = 0.0;
  double exit = 0.0;
};

/// Times at which a vehicle `distance` upstream of a crossing enters and
/// clears its window.
Occupancy occupancy(const VelocityProfile& profile, double distance, double l_enter,
                    double l_safe);

struct MemberConflict {
  std::size_t point = 0;  // conflict point id shared across vehicles
  double distance = 0.0;  // arc distance from the vehicle to the point
  double l_enter = 0.0;
  double l_safe = 0.0;
};

struct MemberInput {
  double initial_speed = 0.0;
  double target = 0.0;
  std::vector<MemberConflict> conflicts;
};

struct MemberPlan {
  VelocityProfile profile;
  std::vector<Occupancy> windows;  // one per MemberConflict
  double t_arrive = std::numeric_limits<double>::infinity();
  double t_leave = -std::numeric_limits<double>::infinity();
};

struct PlanInput {
  std::vector<MemberInput> members;
  // Latest time any earlier vehicle clears each conflict point, indexed by
  // point id. Missing entries count as never occupied.
  std::vector<double> last_leave;
  double t_clock = 0.0;
  // Reject plans in which two members share a point with overlapping windows.
  bool check_member_order = true;
};

struct PlanningResult {
  std::vector<MemberPlan> members;
  double delay = 0.0;
  std::size_t rescale_count = 0;
};

/// Synchronized ramps, stretched by k_rescale until no member reaches a
/// conflict point before the previous vehicles there have cleared it.
PlanningResult plan(const PlanInput& input, const PlannerParams& params);

}  // namespace intercoord
