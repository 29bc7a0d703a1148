#pragma once

#include <compare>
#include <ostream>
#include <span>
#include <vector>

#include "fsvrptw/model.hpp"

namespace fsvrptw {

// (customer, time) node of the route DAG.
struct Tuple {
  int node = 0;
  double time = 0.0;

  friend auto operator<=>(const Tuple&, const Tuple&) = default;
};

struct Path {
  std::vector<Tuple> tuples;  // |arcs| + 1 entries, or empty
  std::vector<int> arcs;      // variable ids, arcs[k] joins tuples[k] -> tuples[k + 1]

  bool empty() const { return arcs.empty(); }
  const Tuple& front() const { return tuples.front(); }
  const Tuple& back() const { return tuples.back(); }

  friend bool operator==(const Path&, const Path&) = default;
};

struct DagArc {
  int from = 0;  // node index
  int to = 0;
  int var = 0;   // variable id
};

struct Dag {
  int sink = 0;                           // label used for the final depot
  std::vector<Tuple> nodes;               // sorted
  std::vector<DagArc> arcs;               // in variable-id order
  std::vector<std::vector<int>> out;      // arc indices leaving each node
  std::vector<int> topo;                  // node indices in topological order

  int node_index(const Tuple& t) const;   // -1 when absent
};

// One node per endpoint tuple, one arc per listed variable. Throws
// InvariantError when the arcs contain a cycle.
Dag build_dag(const VariableSet& vars, std::span<const int> subset, int sink);

// Most arcs; ties go to the smallest start time, then to the
// lexicographically smallest tuple sequence. Empty for an arc-free DAG.
Path longest_path(const Dag& dag);

enum class PathStrategy { multiple, single };

// Repeatedly take the longest path, then drop every node of its customers
// and the path's own arcs. Depot nodes stay, so several routes may share
// (0, 0) and the sink.
std::vector<Path> extract_disjoint_paths(const Dag& dag,
                                         PathStrategy strategy = PathStrategy::multiple);

// True when no customer (1..num_customers) appears in two paths or twice in one.
bool customer_disjoint(std::span<const Path> paths, int num_customers);

void write_dot(std::ostream& out, const Dag& dag, std::span<const Path> highlight = {});

}  // namespace fsvrptw
