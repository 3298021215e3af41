#include "intercoord/planner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace intercoord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack for windows that touch exactly at an LP-tight constraint.
constexpr double kOrderTol = 1e-7;

double segment_distance(const ProfileSegment& s, double dt) {
  return s.start_speed * dt + 0.5 * s.acceleration * dt * dt;
}

double segment_end_speed(const ProfileSegment& s) {
  return s.start_speed + s.acceleration * s.duration;
}

// Time to cover `d` within a segment; the stable root of v t + a t^2 / 2 = d.
double time_within(const ProfileSegment& s, double d) {
  if (d <= 0.0) return 0.0;
  const double disc = std::max(0.0, s.start_speed * s.start_speed + 2.0 * s.acceleration * d);
  const double denom = s.start_speed + std::sqrt(disc);
  if (denom <= 0.0) return kInf;
  return std::min(s.duration, 2.0 * d / denom);
}

}  // namespace

VelocityProfile::VelocityProfile(double start_time, double initial_speed,
                                 std::vector<ProfileSegment> segments)
    : start_time_(start_time), initial_speed_(initial_speed), segments_(std::move(segments)) {
  double v = initial_speed_;
  for (auto& s : segments_) {
    if (!(s.duration >= 0.0)) throw PlanningError("profile segment with negative duration");
    s.start_speed = v;
    ramp_duration_ += s.duration;
    ramp_distance_ += segment_distance(s, s.duration);
    v = segment_end_speed(s);
  }
  terminal_speed_ = v;
}

VelocityProfile VelocityProfile::constant(double start_time, double speed) {
  return VelocityProfile(start_time, speed, {});
}

double VelocityProfile::max_abs_acceleration() const {
  double a = 0.0;
  for (const auto& s : segments_) a = std::max(a, std::abs(s.acceleration));
  return a;
}

ProfileState VelocityProfile::eval(double t) const {
  if (t < start_time_) throw PlanningError("profile evaluated before its start time");
  double tau = t - start_time_;
  double dist = 0.0;
  for (const auto& s : segments_) {
    if (tau <= s.duration) {
      return {dist + segment_distance(s, tau), s.start_speed + s.acceleration * tau};
    }
    dist += segment_distance(s, s.duration);
    tau -= s.duration;
  }
  return {ramp_distance_ + terminal_speed_ * tau, terminal_speed_};
}

double VelocityProfile::time_at_distance(double d) const {
  if (d <= 0.0) return start_time_;
  if (d >= ramp_distance_) {
    if (terminal_speed_ <= 0.0) throw PlanningError("profile never reaches the distance");
    return ramp_end() + (d - ramp_distance_) / terminal_speed_;
  }
  double t = start_time_;
  double covered = 0.0;
  for (const auto& s : segments_) {
    const double span = segment_distance(s, s.duration);
    if (covered + span >= d && span > 0.0) return t + time_within(s, d - covered);
    covered += span;
    t += s.duration;
  }
  return ramp_end();
}

ProfileState profile_eval(const VelocityProfile& profile, double t) { return profile.eval(t); }

VelocityProfile delayed_profile(double start_time, double v0, double target, double delay,
                                double reference_ramp, const PlannerParams& params) {
  const double a = params.a_max;
  const double deficit = delay * target;
  if (delay == 0.0 && v0 == target) return VelocityProfile::constant(start_time, target);

  if (v0 < target) {
    const double gain = target - v0;
    const double pure = 2.0 * deficit / gain;
    if (pure * gain <= a * pure * pure * (1.0 + 1e-12) &&
        pure <= params.ramp_stretch * reference_ramp) {
      const double rate = std::min(a, gain / pure);
      return VelocityProfile(start_time, v0, {{gain / rate, v0, rate}});
    }
  }

  // Slow to u at full rate, hold for h, then climb back to the target:
  // deficit = (2 (w - u)^2 - (w - v0)^2) / (2 a) + (w - u) h.
  const double floor = std::min(params.min_speed, v0);
  if (!(target > floor)) throw PlanningError("unsynchronizable: target at or below the floor");
  const double gap = target - v0;
  double u = target - std::sqrt((2.0 * a * deficit + gap * gap) / 2.0);
  u = std::min({u, v0, target});
  double hold = 0.0;
  if (u < floor) {
    u = floor;
    const double base = (2.0 * (target - u) * (target - u) - gap * gap) / (2.0 * a);
    hold = std::max(0.0, (deficit - base) / (target - u));
  }
  std::vector<ProfileSegment> segs;
  if (v0 > u) segs.push_back({(v0 - u) / a, v0, -a});
  if (hold > 0.0) segs.push_back({hold, u, 0.0});
  if (target > u) segs.push_back({(target - u) / a, u, a});
  return VelocityProfile(start_time, v0, std::move(segs));
}

SyncResult sync_accel_times(const std::vector<double>& targets,
                            const std::vector<double>& initial_speeds, double t_clock,
                            const PlannerParams& params, double delay_scale) {
  if (targets.size() != initial_speeds.size()) {
    throw std::invalid_argument("targets and initial speeds differ in length");
  }
  if (!(params.a_max > 0.0)) throw std::invalid_argument("a_max must be positive");
  const std::size_t n = targets.size();
  SyncResult out;
  out.binding = n;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(targets[i] > 0.0) || !(initial_speeds[i] >= 0.0)) {
      throw PlanningError("target speeds must be positive and initial speeds non-negative");
    }
    const double gain = targets[i] - initial_speeds[i];
    if (gain <= 0.0) continue;
    const double need = gain * gain / (2.0 * params.a_max * targets[i]);
    if (need > worst) {
      worst = need;
      out.binding = i;
    }
  }
  if (out.binding < n) {
    out.reference_ramp = (targets[out.binding] - initial_speeds[out.binding]) / params.a_max;
  }
  out.delay = worst * delay_scale;
  for (std::size_t i = 0; i < n; ++i) {
    out.profiles.push_back(delayed_profile(t_clock, initial_speeds[i], targets[i], out.delay,
                                           out.reference_ramp, params));
    out.t_acc.push_back(out.profiles.back().ramp_duration());
  }
  return out;
}

Occupancy occupancy(const VelocityProfile& profile, double distance, double l_enter,
                    double l_safe) {
  return {profile.time_at_distance(distance - l_enter), profile.time_at_distance(distance + l_safe)};
}

PlanningResult plan(const PlanInput& input, const PlannerParams& params) {
  if (!(params.k_rescale > 1.0)) throw std::invalid_argument("k_rescale must exceed 1");
  const std::size_t n = input.members.size();
  std::vector<double> targets(n), speeds(n);
  for (std::size_t i = 0; i < n; ++i) {
    targets[i] = input.members[i].target;
    speeds[i] = input.members[i].initial_speed;
  }
  auto last_leave = [&](std::size_t point) {
    return point < input.last_leave.size() ? input.last_leave[point] : -kInf;
  };

  double scale = 1.0;
  for (std::size_t rescales = 0;; ++rescales) {
    const SyncResult sync = sync_accel_times(targets, speeds, input.t_clock, params, scale);
    PlanningResult result;
    result.delay = sync.delay;
    result.rescale_count = rescales;
    bool violated = false;
    for (std::size_t i = 0; i < n; ++i) {
      MemberPlan mp;
      mp.profile = sync.profiles[i];
      for (const auto& c : input.members[i].conflicts) {
        const Occupancy w = occupancy(mp.profile, c.distance, c.l_enter, c.l_safe);
        mp.windows.push_back(w);
        mp.t_arrive = std::min(mp.t_arrive, w.entry);
        mp.t_leave = std::max(mp.t_leave, w.exit);
        violated = violated || w.entry < last_leave(c.point);
      }
      result.members.push_back(std::move(mp));
    }
    if (!violated) {
      if (input.check_member_order) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) {
            const auto& ci = input.members[i].conflicts;
            const auto& cj = input.members[j].conflicts;
            for (std::size_t a = 0; a < ci.size(); ++a) {
              for (std::size_t b = 0; b < cj.size(); ++b) {
                if (ci[a].point != cj[b].point) continue;
                const auto& wi = result.members[i].windows[a];
                const auto& wj = result.members[j].windows[b];
                if (wi.exit > wj.entry + kOrderTol && wj.exit > wi.entry + kOrderTol) {
                  throw PlanningError("members " + std::to_string(i) + " and " +
                                      std::to_string(j) + " overlap at conflict point " +
                                      std::to_string(ci[a].point));
                }
              }
            }
          }
        }
      }
      return result;
    }
    if (sync.delay == 0.0) {
      throw PlanningError("transfer condition violated with zero delay; rescaling cannot help");
    }
    if (rescales == params.max_rescales) {
      throw PlanningError("transfer condition unsatisfiable after " +
                          std::to_string(params.max_rescales) + " rescales");
    }
    scale *= params.k_rescale;
  }
}

}  // namespace intercoord
