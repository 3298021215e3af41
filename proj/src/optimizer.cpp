#include "intercoord/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <string>

namespace intercoord {
namespace {

constexpr double kMaxBigM = 1e12;

double box_max(double coef_i, double coef_j, VelocityBounds b) {
  auto pick = [&](double c) { return c > 0.0 ? c * b.v_max : c * b.v_min; };
  return pick(coef_i) + pick(coef_j);
}

struct Node {
  double bound = 0.0;
  std::vector<signed char> fixed;  // -1 free
  LpResult lp;
  std::size_t seq = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.seq > b.seq;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpProblem& p, const SolverOptions& o) : p_(p), opt_(o) {
    const std::size_t n = p_.n_variables();
    cost_.assign(n, 0.0);
    for (std::size_t i = 0; i < p_.n_vehicles; ++i) cost_[i] = 1.0;
  }

  MilpSolution run() {
    MilpSolution out;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    Node root;
    root.fixed.assign(p_.n_conflicts, -1);
    root.lp = relax(root.fixed);
    if (root.lp.status == LpStatus::optimal) {
      root.bound = root.lp.objective;
      open.push(std::move(root));
    }
    while (!open.empty()) {
      Node node = open.top();
      open.pop();
      if (pruned(node)) continue;
      ++nodes_;

      const auto& x = node.lp.x;
      bool integral = true;
      for (std::size_t k = 0; k < p_.n_conflicts; ++k) {
        const double v = x[p_.n_vehicles + k];
        if (std::min(v, 1.0 - v) > opt_.integrality_tol) {
          integral = false;
          break;
        }
      }
      if (integral) offer(node);

      // Branch on the first free binary that is not already at zero; when
      // none is left, the node's smallest completion is its own solution.
      std::size_t branch = p_.n_conflicts;
      for (std::size_t k = 0; k < p_.n_conflicts; ++k) {
        if (node.fixed[k] < 0 && x[p_.n_vehicles + k] > opt_.integrality_tol) {
          branch = k;
          break;
        }
      }
      if (branch == p_.n_conflicts) continue;

      for (signed char value : {0, 1}) {
        Node child;
        child.fixed = node.fixed;
        child.fixed[branch] = value;
        if (x[p_.n_vehicles + branch] == static_cast<double>(value)) {
          child.lp = node.lp;  // parent optimum stays feasible
        } else {
          child.lp = relax(child.fixed);
        }
        if (child.lp.status != LpStatus::optimal) continue;
        child.bound = child.lp.objective;
        child.seq = ++seq_;
        if (!pruned(child)) open.push(std::move(child));
      }
    }

    out.nodes = nodes_;
    out.lp_solves = lp_solves_;
    if (!has_incumbent_) return out;
    out.status = MilpStatus::optimal;
    out.velocities = best_v_;
    out.binaries = best_b_;
    out.objective = best_obj_;
    return out;
  }

 private:
  LpResult relax(const std::vector<signed char>& fixed) {
    const std::size_t n = p_.n_variables();
    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < p_.n_vehicles; ++i) {
      lo[i] = p_.bounds.v_min;
      hi[i] = p_.bounds.v_max;
    }
    for (std::size_t k = 0; k < p_.n_conflicts; ++k) {
      const std::size_t c = p_.n_vehicles + k;
      lo[c] = fixed[k] == 1 ? 1.0 : 0.0;
      hi[c] = fixed[k] == 0 ? 0.0 : 1.0;
    }
    ++lp_solves_;
    return solve_bounded_lp(p_.a_matrix, p_.rhs, cost_, lo, hi, opt_.feasibility_tol);
  }

  // Smallest binary vector reachable below this node.
  std::vector<int> min_completion(const Node& node) const {
    std::vector<int> b(p_.n_conflicts, 0);
    for (std::size_t k = 0; k < p_.n_conflicts; ++k) b[k] = node.fixed[k] == 1 ? 1 : 0;
    return b;
  }

  bool pruned(const Node& node) const {
    if (!has_incumbent_) return false;
    if (node.bound < best_obj_ - opt_.tie_tol) return true;
    if (node.bound <= best_obj_ + opt_.tie_tol) return !(min_completion(node) < best_b_);
    return false;
  }

  void offer(const Node& node) {
    std::vector<signed char> fixed(p_.n_conflicts);
    std::vector<int> b(p_.n_conflicts);
    for (std::size_t k = 0; k < p_.n_conflicts; ++k) {
      b[k] = node.lp.x[p_.n_vehicles + k] > 0.5 ? 1 : 0;
      fixed[k] = static_cast<signed char>(b[k]);
    }
    bool exact = true;
    for (std::size_t k = 0; k < p_.n_conflicts; ++k) {
      exact = exact && node.lp.x[p_.n_vehicles + k] == static_cast<double>(b[k]);
    }
    LpResult lp = exact ? node.lp : relax(fixed);
    if (lp.status != LpStatus::optimal) return;
    const double obj = lp.objective;
    const bool better = !has_incumbent_ || obj > best_obj_ + opt_.tie_tol ||
                        (obj >= best_obj_ - opt_.tie_tol && b < best_b_);
    if (!better) return;
    has_incumbent_ = true;
    best_obj_ = obj;
    best_b_ = std::move(b);
    best_v_.assign(lp.x.begin(), lp.x.begin() + static_cast<std::ptrdiff_t>(p_.n_vehicles));
  }

  const MilpProblem& p_;
  SolverOptions opt_;
  std::vector<double> cost_;
  bool has_incumbent_ = false;
  double best_obj_ = 0.0;
  std::vector<int> best_b_;
  std::vector<double> best_v_;
  std::size_t nodes_ = 0;
  std::size_t lp_solves_ = 0;
  std::size_t seq_ = 0;
};

}  // namespace

MilpProblem assemble(std::span<const ConflictInput> conflicts, std::size_t n,
                     VelocityBounds bounds) {
  if (!(bounds.v_min > 0.0) || !(bounds.v_max > bounds.v_min) || !std::isfinite(bounds.v_max)) {
    throw AssemblyError("velocity bounds must satisfy v_max > v_min > 0");
  }
  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < conflicts.size(); ++s) {
    const auto& c = conflicts[s];
    if (c.i >= n || c.j >= n || c.i == c.j) {
      throw AssemblyError("conflict " + std::to_string(s) + " names an invalid vehicle pair");
    }
    if (!(c.l_enter >= 0.0) || !(c.l_safe >= 0.0) || !std::isfinite(c.l_enter) ||
        !std::isfinite(c.l_safe)) {
      throw AssemblyError("conflict " + std::to_string(s) + " has invalid window lengths");
    }
    for (std::size_t t = 0; t < s; ++t) {
      const auto& o = conflicts[t];
      if ((o.i == c.i && o.j == c.j) || (o.i == c.j && o.j == c.i)) {
        throw AssemblyError("duplicate conflict for vehicles " + std::to_string(c.i) + ", " +
                            std::to_string(c.j));
      }
    }
    if (std::isinf(c.l_i) && c.l_i > 0.0) continue;
    if (std::isinf(c.l_j) && c.l_j > 0.0) continue;
    if (!(c.l_i > c.l_enter) || !(c.l_j > c.l_enter)) {
      throw AssemblyError("conflict " + std::to_string(s) +
                          ": both vehicles must be upstream of the entry threshold");
    }
    kept.push_back(s);
  }

  MilpProblem p;
  p.n_vehicles = n;
  p.n_conflicts = kept.size();
  p.bounds = bounds;
  p.a_matrix = Matrix(2 * p.n_conflicts, n + p.n_conflicts);
  p.rhs.assign(2 * p.n_conflicts, 0.0);
  p.big_m.assign(2 * p.n_conflicts, 0.0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto& c = conflicts[kept[k]];
    const std::size_t r1 = 2 * k;
    const std::size_t r2 = 2 * k + 1;
    const std::size_t col = n + k;
    const double r1_i = c.l_enter - c.l_j;
    const double r1_j = c.l_safe + c.l_i;
    const double r2_i = c.l_safe + c.l_j;
    const double r2_j = c.l_enter - c.l_i;
    // Tightest valid constant over the velocity box; a row that can never be
    // violated still gets M = 1 so the binary column keeps its sign pattern.
    const double m1 = std::max(box_max(r1_i, r1_j, bounds), 0.0) + 1.0;
    const double m2 = std::max(box_max(r2_i, r2_j, bounds), 0.0) + 1.0;
    if (!std::isfinite(m1) || !std::isfinite(m2) || m1 > kMaxBigM || m2 > kMaxBigM) {
      throw AssemblyError("big-M overflow for conflict " + std::to_string(kept[k]));
    }
    p.a_matrix(r1, c.i) = r1_i;
    p.a_matrix(r1, c.j) = r1_j;
    p.a_matrix(r1, col) = m1;
    p.rhs[r1] = m1;
    p.a_matrix(r2, c.i) = r2_i;
    p.a_matrix(r2, c.j) = r2_j;
    p.a_matrix(r2, col) = -m2;
    p.rhs[r2] = 0.0;
    p.big_m[r1] = m1;
    p.big_m[r2] = m2;
    p.conflict_index.push_back({c.i, c.j, col, kept[k]});
  }
  return p;
}

MilpSolution solve(const MilpProblem& problem, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  MilpSolution out = BranchAndBound(problem, options).run();
  out.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

MilpSolution oracle_solve(const MilpProblem& problem, std::size_t max_conflicts) {
  const std::size_t n = problem.n_vehicles;
  const std::size_t p = problem.n_conflicts;
  if (p > max_conflicts || p >= 63) {
    throw std::invalid_argument("oracle_solve: too many conflicts to enumerate (" +
                                std::to_string(p) + ")");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto& a = problem.a_matrix;
  const double v_min = problem.bounds.v_min;
  const double v_max = problem.bounds.v_max;

  struct Ratio {
    std::size_t high;  // v_high >= ratio * v_low
    std::size_t low;
    double ratio;
  };

  MilpSolution best;
  std::vector<double> v(n);
  std::vector<Ratio> ratios;
  std::vector<double> x(problem.n_variables());
  const std::uint64_t count = std::uint64_t{1} << p;
  for (std::uint64_t code = 0; code < count; ++code) {
    ++best.lp_solves;
    std::vector<int> b(p);
    for (std::size_t k = 0; k < p; ++k) b[k] = static_cast<int>((code >> (p - 1 - k)) & 1U);

    ratios.clear();
    bool impossible = false;
    for (std::size_t k = 0; k < p && !impossible; ++k) {
      const auto& e = problem.conflict_index[k];
      const std::size_t row = b[k] == 1 ? 2 * k : 2 * k + 1;
      const double ci = a(row, e.i);
      const double cj = a(row, e.j);
      if (ci < 0.0 && cj > 0.0) {
        ratios.push_back({e.i, e.j, cj / -ci});
      } else if (cj < 0.0 && ci > 0.0) {
        ratios.push_back({e.j, e.i, ci / -cj});
      } else if (ci >= 0.0 && cj >= 0.0 && (ci > 0.0 || cj > 0.0)) {
        impossible = true;  // positive velocities can never satisfy it
      }
    }
    if (impossible) continue;

    std::fill(v.begin(), v.end(), v_max);
    bool settled = false;
    for (std::size_t pass = 0; pass <= n && !settled; ++pass) {
      settled = true;
      for (const auto& r : ratios) {
        const double cap = v[r.high] / r.ratio;
        if (cap < v[r.low] * (1.0 - 1e-15)) {
          v[r.low] = cap;
          settled = false;
        }
      }
    }
    if (!settled) continue;  // a cycle of ratios with product > 1
    if (*std::min_element(v.begin(), v.end()) < v_min - 1e-12) continue;

    std::copy(v.begin(), v.end(), x.begin());
    for (std::size_t k = 0; k < p; ++k) x[n + k] = b[k];
    for (std::size_t row = 0; row < a.rows(); ++row) {
      double lhs = 0.0;
      for (std::size_t col = 0; col < a.cols(); ++col) lhs += a(row, col) * x[col];
      if (lhs > problem.rhs[row] + 1e-7 * std::max(1.0, problem.big_m[row])) {
        throw std::logic_error("oracle_solve: relaxed row violated; big-M is not valid");
      }
    }
    double obj = 0.0;
    for (double vi : v) obj += vi;
    if (best.status != MilpStatus::optimal || obj > best.objective + 1e-9) {
      best.status = MilpStatus::optimal;
      best.objective = obj;
      best.velocities = v;
      best.binaries = b;
    }
  }
  best.nodes = static_cast<std::size_t>(count);
  best.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

PriorityMatrix priority_matrix(const MilpSolution& solution,
                               std::span<const ConflictIndexEntry> conflict_index,
                               std::size_t n) {
  if (solution.status != MilpStatus::optimal) {
    throw std::invalid_argument("priority_matrix requires an optimal solution");
  }
  if (solution.binaries.size() != conflict_index.size()) {
    throw std::invalid_argument("priority_matrix: binaries and conflict index disagree");
  }
  PriorityMatrix s(n);
  for (std::size_t k = 0; k < conflict_index.size(); ++k) {
    const auto& e = conflict_index[k];
    const bool i_first = solution.binaries[k] == 1;
    s.set(e.i, e.j, i_first ? 1 : -1);
    s.set(e.j, e.i, i_first ? -1 : 1);
  }
  return s;
}

}  // namespace intercoord
