#include "intercoord/selector.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace intercoord {

PriorityGraph::PriorityGraph(std::vector<double> velocities, const PriorityMatrix& s,
                             double v_max, double free_tol)
    : velocities_(std::move(velocities)) {
  const std::size_t n = velocities_.size();
  if (s.size() != n) throw std::invalid_argument("priority matrix size does not match velocities");
  free_.resize(n);
  succ_.resize(n);
  pred_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    free_[i] = std::abs(velocities_[i] - v_max) <= free_tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (s(i, j) == 1) {
        succ_[i].push_back(j);
        pred_[j].push_back(i);
      }
    }
  }
}

bool PriorityGraph::has_edge(std::size_t from, std::size_t to) const {
  for (std::size_t t : succ_[from]) {
    if (t == to) return true;
  }
  return false;
}

std::size_t PriorityGraph::edge_count() const {
  std::size_t e = 0;
  for (const auto& s : succ_) e += s.size();
  return e;
}

PriorityGraph build_graph(const std::vector<double>& velocities, const PriorityMatrix& s,
                          double v_max) {
  return PriorityGraph(velocities, s, v_max);
}

std::vector<bool> spanning_tree(const PriorityGraph& g, std::size_t root) {
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> stack{root};
  seen.at(root) = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : g.successors(u)) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

FlagVector extract_subset(const PriorityGraph& g) {
  const std::size_t n = g.size();
  FlagVector flag(n, 1);
  std::vector<std::vector<bool>> tree(n);
  for (std::size_t i = 0; i < n; ++i) tree[i] = spanning_tree(g, i);

  auto clear = [&](const std::vector<bool>& members) {
    for (std::size_t k = 0; k < n; ++k) {
      if (members[k]) flag[k] = 0;
    }
  };

  // A free node waiting behind a vehicle outside its own descendants would
  // be slowed by it; drop the node and everything that yields to it. Inside
  // a cycle the predecessor is also a descendant, so the cycle stays.
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.is_free(i) || g.indegree(i) == 0) continue;
    for (std::size_t p : g.predecessors(i)) {
      if (!tree[i][p]) {
        clear(tree[i]);
        break;
      }
    }
  }

  // Two unrelated full-speed roots that share a descendant: the shared part
  // is deferred to a later round.
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.is_free(i) || g.indegree(i) != 0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!g.is_free(j) || g.indegree(j) != 0 || g.adjacent(i, j)) continue;
      for (std::size_t x = 0; x < n; ++x) {
        if (tree[i][x] && tree[j][x]) clear(tree[x]);
      }
    }
  }
  return flag;
}

FlagVector extract_subset(const std::vector<double>& velocities, const PriorityMatrix& s,
                          double v_max) {
  return extract_subset(build_graph(velocities, s, v_max));
}

std::string to_dot(const PriorityGraph& g, const FlagVector& flags,
                   const std::vector<std::string>& labels) {
  std::string out = "digraph priority {\n";
  char buf[160];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::string name = i < labels.size() ? labels[i] : std::to_string(i);
    std::snprintf(buf, sizeof buf, "  n%zu [label=\"%s\\nv=%.4f\"%s%s];\n", i, name.c_str(),
                  g.velocity(i), g.is_free(i) ? " shape=doublecircle" : "",
                  i < flags.size() && flags[i] == 1 ? " style=filled" : "");
    out += buf;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j : g.successors(i)) {
      std::snprintf(buf, sizeof buf, "  n%zu -> n%zu;\n", i, j);
      out += buf;
    }
  }
  out += "}\n";
  return out;
}

}  // namespace intercoord
