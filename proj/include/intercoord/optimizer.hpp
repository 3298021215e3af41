#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "intercoord/simplex.hpp"

namespace intercoord {

struct VelocityBounds {
  double v_min = 5.0;
  double v_max = 20.0;
};

// One crossing between two lanes, expressed in the crossing's local frame.
// An empty lane is passed as l = +infinity and drops out of the problem.
struct ConflictInput {
  std::size_t i = 0;
  std::size_t j = 0;
  double l_i = 0.0;
  double l_j = 0.0;
  double l_enter = 0.0;
  double l_safe = 0.0;
};

struct ConflictIndexEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t column = 0;  // binary column in the decision vector
  std::size_t source = 0;  // position in the assembled input list
};

class AssemblyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rows 2k and 2k+1 hold conflict k:
///   (Le - Lj') v_i + (Ls + Li') v_j + M b <= M     (i clears before j enters)
///   (Ls + Lj') v_i + (Le - Li') v_j - M b <= 0     (j clears before i enters)
/// Decision vector: N velocities followed by P binaries.
struct MilpProblem {
  std::size_t n_vehicles = 0;
  std::size_t n_conflicts = 0;
  Matrix a_matrix;
  std::vector<double> rhs;
  VelocityBounds bounds;
  std::vector<ConflictIndexEntry> conflict_index;
  std::vector<double> big_m;  // one per row

  std::size_t n_variables() const { return n_vehicles + n_conflicts; }
};

enum class MilpStatus { optimal, infeasible };

struct MilpSolution {
  MilpStatus status = MilpStatus::infeasible;
  std::vector<double> velocities;
  std::vector<int> binaries;
  double objective = 0.0;
  double solve_time = 0.0;  // seconds, wall clock
  std::size_t nodes = 0;
  std::size_t lp_solves = 0;
};

struct SolverOptions {
  double integrality_tol = 1e-6;
  double feasibility_tol = 1e-7;
  double tie_tol = 1e-9;
};

MilpProblem assemble(std::span<const ConflictInput> conflicts, std::size_t n,
                     VelocityBounds bounds);

/// Branch-and-bound over the priority binaries with best-bound node order.
/// Among optimal binary vectors (objective within tie_tol) the
/// lexicographically smallest is returned.
MilpSolution solve(const MilpProblem& problem, const SolverOptions& options = {});

/// Reference solver: enumerates all 2^P binary assignments in lexicographic
/// order. For a fixed assignment every enforced row is a ratio constraint
/// v_a >= r v_b, so the velocity LP has a componentwise-greatest solution,
/// found by relaxing from v_max. Independent of the simplex kernel.
MilpSolution oracle_solve(const MilpProblem& problem, std::size_t max_conflicts = 20);

/// s(i, j) = 1 when vehicle i clears the shared crossing before j arrives.
class PriorityMatrix {
 public:
  explicit PriorityMatrix(std::size_t n = 0) : n_(n), s_(n * n, 0) {}

  std::size_t size() const { return n_; }
  int operator()(std::size_t i, std::size_t j) const { return s_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, int v) { s_[i * n_ + j] = v; }

  friend bool operator==(const PriorityMatrix&, const PriorityMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<int> s_;
};

/// b = 1 enforces the first row (i before j): s_ij = 1, s_ji = -1.
PriorityMatrix priority_matrix(const MilpSolution& solution,
                               std::span<const ConflictIndexEntry> conflict_index,
                               std::size_t n);

}  // namespace intercoord
