#pragma once

#include <cstddef>
#include <vector>

namespace intercoord {

// Dense row-major matrix; just enough for the LP kernel and the MILP blocks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class LpStatus { optimal, infeasible };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t pivots = 0;
};

/// maximize c.x subject to A x <= b, lower <= x <= upper (all bounds finite).
///
/// Two-phase primal simplex on a dense tableau with bounded variables. Bland's
/// rule is used for both the entering and the leaving choice so the pivot
/// sequence is deterministic and cannot cycle.
LpResult solve_bounded_lp(const Matrix& a, const std::vector<double>& b,
                          const std::vector<double>& c, const std::vector<double>& lower,
                          const std::vector<double>& upper, double feasibility_tol = 1e-7);

}  // namespace intercoord
