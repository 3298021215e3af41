#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "intercoord/optimizer.hpp"
#include "random_instances.hpp"

using namespace intercoord;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MilpProblem two_vehicle(double l1, double l2) {
  const std::vector<ConflictInput> c{{0, 1, l1, l2, 5.0, 8.0}};
  return assemble(c, 2, {5.0, 20.0});
}

// Either-or condition on raw lengths: one vehicle clears before the other enters.
bool disjunction_holds(const ConflictInput& c, const std::vector<double>& v, double tol) {
  const double i_first = (c.l_safe + c.l_i) / v[c.i] - (c.l_j - c.l_enter) / v[c.j];
  const double j_first = (c.l_safe + c.l_j) / v[c.j] - (c.l_i - c.l_enter) / v[c.i];
  return i_first <= tol || j_first <= tol;
}

}  // namespace

TEST(Assemble, TwoVehicleStencil) {
  const auto p = two_vehicle(100.0, 60.0);
  ASSERT_EQ(p.a_matrix.rows(), 2u);
  ASSERT_EQ(p.a_matrix.cols(), 3u);
  EXPECT_DOUBLE_EQ(p.a_matrix(0, 0), -55.0);
  EXPECT_DOUBLE_EQ(p.a_matrix(0, 1), 108.0);
  EXPECT_DOUBLE_EQ(p.a_matrix(0, 2), 1886.0);
  EXPECT_DOUBLE_EQ(p.rhs[0], 1886.0);
  EXPECT_DOUBLE_EQ(p.a_matrix(1, 0), 68.0);
  EXPECT_DOUBLE_EQ(p.a_matrix(1, 1), -95.0);
  EXPECT_DOUBLE_EQ(p.a_matrix(1, 2), -886.0);
  EXPECT_DOUBLE_EQ(p.rhs[1], 0.0);
  ASSERT_EQ(p.conflict_index.size(), 1u);
  EXPECT_EQ(p.conflict_index[0].column, 2u);
}

TEST(Assemble, NoConflictsIsBoxProblem) {
  const auto p = assemble({}, 4, {5.0, 20.0});
  EXPECT_TRUE(p.a_matrix.empty());
  EXPECT_EQ(p.n_variables(), 4u);
}

TEST(Assemble, EmptyLaneDropsConflict) {
  const std::vector<ConflictInput> c{{0, 1, 100.0, kInf, 5.0, 8.0}};
  const auto p = assemble(c, 2, {5.0, 20.0});
  const auto q = assemble({}, 2, {5.0, 20.0});
  EXPECT_EQ(p.a_matrix, q.a_matrix);
  EXPECT_EQ(p.rhs, q.rhs);
  EXPECT_EQ(p.n_conflicts, 0u);
}

TEST(Assemble, RejectsDownstreamVehicle) {
  const std::vector<ConflictInput> c{{0, 1, 4.0, 60.0, 5.0, 8.0}};
  EXPECT_THROW(assemble(c, 2, {5.0, 20.0}), AssemblyError);
}

TEST(Assemble, RejectsBigMOverflow) {
  const std::vector<ConflictInput> c{{0, 1, 1e15, 60.0, 5.0, 8.0}};
  EXPECT_THROW(assemble(c, 2, {5.0, 20.0}), AssemblyError);
}

TEST(Assemble, RejectsBadBounds) {
  EXPECT_THROW(assemble({}, 1, {0.0, 20.0}), AssemblyError);
  EXPECT_THROW(assemble({}, 1, {20.0, 20.0}), AssemblyError);
}

TEST(Solve, TwoVehicleBothFullSpeed) {
  const auto s = solve(two_vehicle(100.0, 60.0));
  ASSERT_EQ(s.status, MilpStatus::optimal);
  EXPECT_NEAR(s.velocities[0], 20.0, 1e-9);
  EXPECT_NEAR(s.velocities[1], 20.0, 1e-9);
  EXPECT_NEAR(s.objective, 40.0, 1e-9);
  EXPECT_EQ(s.binaries, std::vector<int>{0});
}

TEST(Solve, TwoVehicleFartherSlowed) {
  const auto p = two_vehicle(70.0, 60.0);
  const auto s = solve(p);
  ASSERT_EQ(s.status, MilpStatus::optimal);
  EXPECT_NEAR(s.velocities[0], 1300.0 / 68.0, 1e-9);
  EXPECT_NEAR(s.velocities[1], 20.0, 1e-9);
  EXPECT_NEAR(s.objective, 39.11764705882353, 1e-9);
  const auto pm = priority_matrix(s, p.conflict_index, 2);
  // The closer vehicle (index 1) crosses first.
  EXPECT_EQ(pm(1, 0), 1);
  EXPECT_EQ(pm(0, 1), -1);
}

TEST(Solve, BoxProblemGivesVmax) {
  const auto s = solve(assemble({}, 4, {5.0, 20.0}));
  ASSERT_EQ(s.status, MilpStatus::optimal);
  for (double v : s.velocities) EXPECT_DOUBLE_EQ(v, 20.0);
  EXPECT_DOUBLE_EQ(s.objective, 80.0);
}

TEST(Solve, InfeasibleInstance) {
  const std::vector<ConflictInput> c{{0, 1, 100.0, 100.0, 5.0, 1000.0}};
  const auto p = assemble(c, 2, {10.0, 10.0 + 1e-12});
  EXPECT_EQ(solve(p).status, MilpStatus::infeasible);
  EXPECT_EQ(oracle_solve(p).status, MilpStatus::infeasible);
}

TEST(Oracle, MatchesFrozenExamples) {
  const auto a = oracle_solve(two_vehicle(100.0, 60.0));
  EXPECT_NEAR(a.objective, 40.0, 1e-9);
  const auto b = oracle_solve(two_vehicle(70.0, 60.0));
  EXPECT_NEAR(b.objective, 39.11764705882353, 1e-9);
  EXPECT_EQ(b.binaries, std::vector<int>{0});
  const auto c = oracle_solve(assemble({}, 4, {5.0, 20.0}));
  EXPECT_DOUBLE_EQ(c.objective, 80.0);
}

TEST(Oracle, SingleConflictSolvesTwoSubproblems) {
  EXPECT_EQ(oracle_solve(two_vehicle(100.0, 60.0)).lp_solves, 2u);
}

TEST(Oracle, RejectsLargeInstances) {
  std::vector<ConflictInput> c;
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = i + 1; j < 7; ++j) c.push_back({i, j, 100.0, 120.0, 4.0, 5.0});
  }
  const auto p = assemble(c, 7, {5.0, 20.0});
  ASSERT_EQ(p.n_conflicts, 21u);
  EXPECT_THROW(oracle_solve(p), std::invalid_argument);
}

TEST(PriorityMatrix, ZeroWithoutConflicts) {
  const auto p = assemble({}, 3, {5.0, 20.0});
  const auto s = solve(p);
  EXPECT_EQ(priority_matrix(s, p.conflict_index, 3), PriorityMatrix(3));
}

TEST(Solve, RandomInstancesAgreeWithOracle) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 150; ++trial) {
    const auto inst = testing_support::random_instance(rng, 8, 16);
    const auto p = assemble(inst.conflicts, inst.n, {5.0, 20.0});
    const auto fast = solve(p);
    const auto ref = oracle_solve(p);
    ASSERT_EQ(fast.status, ref.status) << "trial " << trial;
    if (ref.status != MilpStatus::optimal) continue;
    EXPECT_NEAR(fast.objective, ref.objective, 1e-6) << "trial " << trial;

    // Output is feasible in the original either-or form.
    for (const auto& c : inst.conflicts) {
      EXPECT_TRUE(disjunction_holds(c, fast.velocities, 1e-6));
    }
    for (double v : fast.velocities) {
      EXPECT_GE(v, 5.0 - 1e-9);
      EXPECT_LE(v, 20.0 + 1e-9);
    }
    for (int b : fast.binaries) EXPECT_TRUE(b == 0 || b == 1);

    const auto pm = priority_matrix(fast, p.conflict_index, p.n_vehicles);
    int plus = 0, minus = 0;
    for (std::size_t i = 0; i < p.n_vehicles; ++i) {
      EXPECT_EQ(pm(i, i), 0);
      for (std::size_t j = 0; j < p.n_vehicles; ++j) {
        EXPECT_EQ(pm(i, j), -pm(j, i));
        plus += pm(i, j) == 1;
        minus += pm(i, j) == -1;
      }
    }
    EXPECT_EQ(plus, static_cast<int>(p.n_conflicts));
    EXPECT_EQ(minus, static_cast<int>(p.n_conflicts));
  }
}

TEST(Solve, RemovingConflictNeverHurts) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = testing_support::random_instance(rng, 6, 10);
    if (inst.conflicts.empty()) continue;
    const auto full = solve(assemble(inst.conflicts, inst.n, {5.0, 20.0}));
    inst.conflicts.pop_back();
    const auto fewer = solve(assemble(inst.conflicts, inst.n, {5.0, 20.0}));
    if (full.status != MilpStatus::optimal) continue;
    ASSERT_EQ(fewer.status, MilpStatus::optimal);
    EXPECT_GE(fewer.objective, full.objective - 1e-9);
  }
}

TEST(Solve, LengthScalingLeavesVelocitiesUnchanged) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testing_support::random_instance(rng, 6, 10);
    const auto base = solve(assemble(inst.conflicts, inst.n, {5.0, 20.0}));
    for (auto& c : inst.conflicts) {
      c.l_i *= 2.5;
      c.l_j *= 2.5;
      c.l_enter *= 2.5;
      c.l_safe *= 2.5;
    }
    const auto scaled = solve(assemble(inst.conflicts, inst.n, {5.0, 20.0}));
    ASSERT_EQ(base.status, scaled.status);
    if (base.status != MilpStatus::optimal) continue;
    for (std::size_t i = 0; i < inst.n; ++i) {
      EXPECT_NEAR(base.velocities[i], scaled.velocities[i], 1e-7);
    }
  }
}

TEST(Solve, RepeatedSolvesAreIdentical) {
  std::mt19937_64 rng(11);
  const auto inst = testing_support::random_instance(rng, 8, 16);
  const auto p = assemble(inst.conflicts, inst.n, {5.0, 20.0});
  const auto a = solve(p);
  const auto b = solve(p);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.velocities, b.velocities);
  EXPECT_EQ(a.binaries, b.binaries);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Solve, TiesPickLexicographicallySmallestBinaries) {
  // Symmetric pair: both orders give the same objective.
  const std::vector<ConflictInput> c{{0, 1, 60.0, 60.0, 5.0, 8.0}};
  const auto p = assemble(c, 2, {5.0, 20.0});
  const auto fast = solve(p);
  const auto ref = oracle_solve(p);
  ASSERT_EQ(fast.status, MilpStatus::optimal);
  EXPECT_EQ(fast.binaries, ref.binaries);
  EXPECT_EQ(fast.binaries, std::vector<int>{0});
}
