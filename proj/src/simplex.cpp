#include "intercoord/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace intercoord {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;

// Tableau over variables [structural y | slack | artificial]. Structural
// variables are shifted so that their lower bound is zero.
class Tableau {
 public:
  Tableau(const Matrix& a, const std::vector<double>& rhs, std::size_t n_struct,
          const std::vector<double>& ub)
      : m_(a.rows()), n_(n_struct) {
    std::size_t n_art = 0;
    for (double r : rhs) n_art += r < 0.0 ? 1 : 0;
    total_ = n_ + m_ + n_art;
    t_ = Matrix(m_, total_);
    beta_.assign(m_, 0.0);
    basis_.assign(m_, 0);
    upper_.assign(total_, kInf);
    at_upper_.assign(total_, false);
    is_basic_.assign(total_, false);
    for (std::size_t j = 0; j < n_; ++j) upper_[j] = ub[j];
    std::size_t art = n_ + m_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) t_(i, j) = sign * a(i, j);
      t_(i, n_ + i) = sign;
      beta_[i] = sign * rhs[i];
      if (sign < 0.0) {
        t_(i, art) = 1.0;
        basis_[i] = art;
        artificials_.push_back(art);
        ++art;
      } else {
        basis_[i] = n_ + i;
      }
      is_basic_[basis_[i]] = true;
    }
  }

  const std::vector<std::size_t>& artificials() const { return artificials_; }
  std::size_t total() const { return total_; }
  std::size_t pivots() const { return pivots_; }

  void close_artificials() {
    for (std::size_t j : artificials_) upper_[j] = 0.0;
  }

  double value_of(std::size_t j) const {
    if (is_basic_[j]) {
      for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] == j) return beta_[i];
      }
    }
    return at_upper_[j] ? upper_[j] : 0.0;
  }

  // Maximizes cost.x over the current tableau; returns false if unbounded.
  bool optimize(const std::vector<double>& cost) {
    for (;;) {
      std::size_t entering = total_;
      double direction = 0.0;
      for (std::size_t j = 0; j < total_; ++j) {
        if (is_basic_[j] || upper_[j] == 0.0) continue;
        double d = cost[j];
        for (std::size_t i = 0; i < m_; ++i) d -= cost[basis_[i]] * t_(i, j);
        if (!at_upper_[j] && d > kCostTol) {
          entering = j;
          direction = 1.0;
          break;
        }
        if (at_upper_[j] && d < -kCostTol) {
          entering = j;
          direction = -1.0;
          break;
        }
      }
      if (entering == total_) return true;

      // Moving the entering variable by theta*direction changes basic
      // variable i by -theta*direction*t(i, entering).
      double theta = upper_[entering];
      std::size_t leave_row = m_;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const double rate = -direction * t_(i, entering);
        double limit = kInf;
        bool to_upper = false;
        if (rate < -kPivotTol) {
          limit = std::max(0.0, beta_[i]) / -rate;
        } else if (rate > kPivotTol && upper_[basis_[i]] < kInf) {
          limit = std::max(0.0, upper_[basis_[i]] - beta_[i]) / rate;
          to_upper = true;
        } else {
          continue;
        }
        if (limit < theta - 1e-12 ||
            (leave_row < m_ && std::abs(limit - theta) <= 1e-12 && basis_[i] < basis_[leave_row])) {
          theta = limit;
          leave_row = i;
          leave_to_upper = to_upper;
        }
      }
      if (theta == kInf) return false;
      ++pivots_;

      for (std::size_t i = 0; i < m_; ++i) beta_[i] -= direction * theta * t_(i, entering);
      if (leave_row == m_) {
        at_upper_[entering] = !at_upper_[entering];
        continue;
      }

      const std::size_t leaving = basis_[leave_row];
      const double entering_value = (at_upper_[entering] ? upper_[entering] : 0.0) +
                                    direction * theta;
      const double piv = t_(leave_row, entering);
      for (std::size_t j = 0; j < total_; ++j) t_(leave_row, j) /= piv;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == leave_row) continue;
        const double f = t_(i, entering);
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < total_; ++j) t_(i, j) -= f * t_(leave_row, j);
      }
      beta_[leave_row] = entering_value;
      is_basic_[leaving] = false;
      at_upper_[leaving] = leave_to_upper;
      is_basic_[entering] = true;
      at_upper_[entering] = false;
      basis_[leave_row] = entering;
    }
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::size_t total_ = 0;
  Matrix t_;
  std::vector<double> beta_;
  std::vector<std::size_t> basis_;
  std::vector<double> upper_;
  std::vector<bool> at_upper_;
  std::vector<bool> is_basic_;
  std::vector<std::size_t> artificials_;
  std::size_t pivots_ = 0;
};

}  // namespace

LpResult solve_bounded_lp(const Matrix& a, const std::vector<double>& b,
                          const std::vector<double>& c, const std::vector<double>& lower,
                          const std::vector<double>& upper, double feasibility_tol) {
  const std::size_t n = c.size();
  if (lower.size() != n || upper.size() != n || a.rows() != b.size() ||
      (a.rows() > 0 && a.cols() != n)) {
    throw std::invalid_argument("solve_bounded_lp: dimension mismatch");
  }
  LpResult result;
  std::vector<double> ub(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j])) {
      throw std::invalid_argument("solve_bounded_lp: bounds must be finite");
    }
    if (upper[j] < lower[j] - feasibility_tol) return result;
    ub[j] = std::max(0.0, upper[j] - lower[j]);
  }
  std::vector<double> rhs(b);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) rhs[i] -= a(i, j) * lower[j];
  }

  Tableau tab(a, rhs, n, ub);
  if (!tab.artificials().empty()) {
    std::vector<double> phase1(tab.total(), 0.0);
    for (std::size_t j : tab.artificials()) phase1[j] = -1.0;
    tab.optimize(phase1);
    double infeasibility = 0.0;
    for (std::size_t j : tab.artificials()) infeasibility += tab.value_of(j);
    if (infeasibility > feasibility_tol) {
      result.pivots = tab.pivots();
      return result;
    }
    tab.close_artificials();
  }
  std::vector<double> phase2(tab.total(), 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
  tab.optimize(phase2);

  result.status = LpStatus::optimal;
  result.x.resize(n);
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    result.x[j] = std::clamp(lower[j] + tab.value_of(j), lower[j], upper[j]);
    result.objective += c[j] * result.x[j];
  }
  result.pivots = tab.pivots();
  return result;
}

}  // namespace intercoord
