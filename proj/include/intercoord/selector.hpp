#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "intercoord/optimizer.hpp"

namespace intercoord {

/// Priority graph: an edge j -> i means vehicle j passes before vehicle i.
class PriorityGraph {
 public:
  PriorityGraph(std::vector<double> velocities, const PriorityMatrix& s, double v_max,
                double free_tol = 1e-9);

  std::size_t size() const { return velocities_.size(); }
  double velocity(std::size_t i) const { return velocities_[i]; }
  // Free nodes run at the upper speed limit.
  bool is_free(std::size_t i) const { return free_[i]; }
  const std::vector<std::size_t>& successors(std::size_t i) const { return succ_[i]; }
  const std::vector<std::size_t>& predecessors(std::size_t i) const { return pred_[i]; }
  std::size_t indegree(std::size_t i) const { return pred_[i].size(); }
  bool has_edge(std::size_t from, std::size_t to) const;
  bool adjacent(std::size_t a, std::size_t b) const { return has_edge(a, b) || has_edge(b, a); }
  std::size_t edge_count() const;

 private:
  std::vector<double> velocities_;
  std::vector<bool> free_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

PriorityGraph build_graph(const std::vector<double>& velocities, const PriorityMatrix& s,
                          double v_max);

/// The node itself plus every node reachable from it, as a membership mask.
std::vector<bool> spanning_tree(const PriorityGraph& g, std::size_t root);

using FlagVector = std::vector<int>;

/// Keeps the vehicles whose inclusion does not slow down a vehicle that
/// could otherwise run at full speed.
FlagVector extract_subset(const PriorityGraph& g);
FlagVector extract_subset(const std::vector<double>& velocities, const PriorityMatrix& s,
                          double v_max);

/// Graphviz rendering with kept nodes filled.
std::string to_dot(const PriorityGraph& g, const FlagVector& flags,
                   const std::vector<std::string>& labels = {});

}  // namespace intercoord
