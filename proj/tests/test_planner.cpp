#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "intercoord/planner.hpp"
#include "profile_oracle.hpp"

using namespace intercoord;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PlanInput single_lane_input(double v0, double target, double distance) {
  PlanInput in;
  in.members.push_back({v0, target, {{0, distance, 5.0, 8.0}}});
  return in;
}

}  // namespace

TEST(Profile, EvalAtStartIsOrigin) {
  const VelocityProfile p(3.0, 10.0, {{4.0, 10.0, 2.5}});
  const auto s = profile_eval(p, 3.0);
  EXPECT_DOUBLE_EQ(s.distance, 0.0);
  EXPECT_DOUBLE_EQ(s.speed, 10.0);
  EXPECT_THROW(profile_eval(p, 2.9), PlanningError);
}

TEST(Profile, TrapezoidDistances) {
  const VelocityProfile p(0.0, 10.0, {{4.0, 10.0, 2.5}});
  EXPECT_DOUBLE_EQ(p.eval(4.0).distance, 60.0);
  EXPECT_DOUBLE_EQ(p.eval(4.0).speed, 20.0);
  EXPECT_DOUBLE_EQ(p.eval(6.0).distance, 100.0);
  EXPECT_DOUBLE_EQ(p.eval(6.0).speed, 20.0);
  EXPECT_DOUBLE_EQ(p.time_at_distance(60.0), 4.0);
  EXPECT_DOUBLE_EQ(p.time_at_distance(100.0), 6.0);
  EXPECT_NEAR(p.time_at_distance(p.eval(1.7).distance), 1.7, 1e-12);
}

TEST(Sync, TwoVehicleExample) {
  const auto r = sync_accel_times({15.0, 20.0}, {10.0, 10.0}, 0.0, {});
  EXPECT_EQ(r.binding, 1u);
  EXPECT_DOUBLE_EQ(r.delay, 1.0);
  EXPECT_DOUBLE_EQ(r.t_acc[1], 4.0);
  EXPECT_DOUBLE_EQ(r.t_acc[0], 6.0);
  EXPECT_NEAR(r.profiles[0].segments()[0].acceleration, 5.0 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.profiles[0].eval(6.0).distance, 75.0);
  EXPECT_DOUBLE_EQ(r.profiles[1].eval(6.0).distance, 100.0);
}

TEST(Sync, AlreadyAtTarget) {
  const auto r = sync_accel_times({20.0, 20.0}, {20.0, 20.0}, 0.0, {});
  EXPECT_DOUBLE_EQ(r.delay, 0.0);
  EXPECT_DOUBLE_EQ(r.t_acc[0], 0.0);
  EXPECT_DOUBLE_EQ(r.t_acc[1], 0.0);
}

TEST(Sync, SingleVehicle) {
  const auto r = sync_accel_times({20.0}, {10.0}, 0.0, {});
  EXPECT_DOUBLE_EQ(r.t_acc[0], 4.0);
  EXPECT_DOUBLE_EQ(r.delay, 1.0);
}

TEST(Sync, DecelerationDipMatchesDelay) {
  // One vehicle must slow down while the other speeds up.
  const auto r = sync_accel_times({20.0, 12.0}, {10.0, 16.0}, 0.0, {});
  const auto& dip = r.profiles[1];
  ASSERT_GE(dip.segments().size(), 2u);
  EXPECT_LT(dip.segments()[0].acceleration, 0.0);
  const double t = dip.ramp_end() + 3.0;
  EXPECT_NEAR(dip.eval(t).distance, 12.0 * (t - r.delay), 1e-9);
}

TEST(Arrival, ClosedFormExample) {
  const auto p = delayed_profile(0.0, 10.0, 20.0, 1.0, 4.0, {});
  const auto w = occupancy(p, 200.0, 5.0, 8.0);
  EXPECT_NEAR(w.entry, 10.75, 1e-12);
  EXPECT_NEAR(w.exit, 11.4, 1e-12);
  const testing_support::IntegratedProfile num(p, 15.0);
  EXPECT_NEAR(num.crossing(195.0), 10.75, 1e-9);
  EXPECT_NEAR(num.crossing(208.0), 11.4, 1e-9);
}

TEST(Arrival, ConstantSpeed) {
  const auto p = VelocityProfile::constant(2.0, 16.0);
  EXPECT_DOUBLE_EQ(occupancy(p, 100.0, 4.0, 5.0).entry, 2.0 + 96.0 / 16.0);
}

TEST(Arrival, EqualRatioMeansEqualEntry) {
  const auto r = sync_accel_times({12.0, 18.0}, {9.0, 16.0}, 0.0, {});
  const double e0 = occupancy(r.profiles[0], 120.0 + 4.0, 4.0, 5.0).entry;
  const double e1 = occupancy(r.profiles[1], 180.0 + 4.0, 4.0, 5.0).entry;
  EXPECT_NEAR(e0, e1, 1e-9);
  const testing_support::IntegratedProfile n0(r.profiles[0], 20.0), n1(r.profiles[1], 20.0);
  EXPECT_NEAR(n0.crossing(120.0), n1.crossing(180.0), 1e-9);
}

TEST(Plan, NoPreviousSubsetNeedsNoRescale) {
  const auto r = plan(single_lane_input(10.0, 20.0, 200.0), {});
  EXPECT_EQ(r.rescale_count, 0u);
  EXPECT_DOUBLE_EQ(r.delay, 1.0);
  EXPECT_NEAR(r.members[0].t_arrive, 10.75, 1e-12);
  EXPECT_NEAR(r.members[0].t_leave, 11.4, 1e-12);
}

TEST(Plan, OneRescaleClearsSmallViolation) {
  auto in = single_lane_input(10.0, 20.0, 200.0);
  in.last_leave = {10.85};
  const auto r = plan(in, {});
  EXPECT_EQ(r.rescale_count, 1u);
  EXPECT_NEAR(r.delay, 1.2, 1e-15);
  EXPECT_NEAR(r.members[0].t_arrive, 10.95, 1e-12);
}

TEST(Plan, ZeroDelayWithViolationFails) {
  auto in = single_lane_input(20.0, 20.0, 200.0);
  in.last_leave = {50.0};
  EXPECT_THROW(plan(in, {}), PlanningError);
}

TEST(Plan, RescaleCapIsEnforced) {
  auto in = single_lane_input(19.0, 20.0, 200.0);
  in.last_leave = {1e6};
  PlannerParams params;
  params.max_rescales = 3;
  EXPECT_THROW(plan(in, params), PlanningError);
}

TEST(Plan, LongWaitUsesHold) {
  auto in = single_lane_input(15.0, 20.0, 200.0);
  in.last_leave = {40.0};
  PlannerParams params;
  params.max_rescales = 40;
  const auto r = plan(in, params);
  EXPECT_GT(r.rescale_count, 20u);
  bool holds = false;
  for (const auto& s : r.members[0].profile.segments()) holds = holds || s.acceleration == 0.0;
  EXPECT_TRUE(holds);
  EXPECT_GE(r.members[0].t_arrive, 40.0);
  EXPECT_LE(r.members[0].profile.max_abs_acceleration(), 2.5 + 1e-12);
  const testing_support::IntegratedProfile num(r.members[0].profile, 90.0);
  for (double v : num.speeds()) EXPECT_GE(v, 0.0);
}

TEST(Plan, OverlappingMembersAreRejected) {
  PlanInput in;
  in.members.push_back({20.0, 20.0, {{0, 100.0, 4.0, 5.0}}});
  in.members.push_back({20.0, 20.0, {{0, 102.0, 4.0, 5.0}}});
  EXPECT_THROW(plan(in, {}), PlanningError);
  in.check_member_order = false;
  EXPECT_NO_THROW(plan(in, {}));
}

TEST(Plan, RandomSubsetsSynchronize) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> v0d(8.0, 18.0), off(-8.0, 8.0);
  std::uniform_real_distribution<double> wait(0.0, 6.0);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = size(rng);
    std::vector<double> v0(n), w(n);
    for (int i = 0; i < n; ++i) {
      v0[i] = v0d(rng);
      w[i] = std::clamp(v0[i] + off(rng), 5.0, 20.0);
    }
    const double scale = std::pow(1.2, static_cast<int>(wait(rng)));
    const auto r = sync_accel_times(w, v0, 0.0, {}, scale);
    double settle = 0.0;
    for (const auto& p : r.profiles) settle = std::max(settle, p.ramp_end());
    for (int i = 0; i < n; ++i) {
      const auto& p = r.profiles[i];
      EXPECT_LE(p.max_abs_acceleration(), 2.5 * (1.0 + 1e-12));
      const testing_support::IntegratedProfile num(p, settle + 5.0);
      for (double v : num.speeds()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 20.0 + 1e-12);
      }
      for (double t : {settle, settle + 2.5, settle + 5.0}) {
        EXPECT_NEAR(p.eval(t).distance / w[i], t - r.delay, 1e-9);
      }
      const double d = p.ramp_distance() + 30.0;
      EXPECT_NEAR(occupancy(p, d + 4.0, 4.0, 5.0).entry, d / w[i] + r.delay, 1e-9);
      EXPECT_NEAR(num.crossing(d), d / w[i] + r.delay, 1e-9);
    }
  }
}
