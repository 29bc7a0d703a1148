#include "fsvrptw/dagpath.hpp"

#include <algorithm>
#include <set>

#include "fsvrptw/errors.hpp"
#include "fsvrptw/format.hpp"

namespace fsvrptw {

int Dag::node_index(const Tuple& t) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), t);
  if (it == nodes.end() || *it != t) return -1;
  return static_cast<int>(it - nodes.begin());
}

Dag build_dag(const VariableSet& vars, std::span<const int> subset, int sink) {
  Dag dag;
  dag.sink = sink;
  std::vector<int> ids(subset.begin(), subset.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int v : ids) {
    const ArcKey& a = vars[v].arc;
    dag.nodes.push_back({a.i, a.s});
    dag.nodes.push_back({a.j, a.t});
  }
  std::sort(dag.nodes.begin(), dag.nodes.end());
  dag.nodes.erase(std::unique(dag.nodes.begin(), dag.nodes.end()), dag.nodes.end());
  dag.out.assign(dag.nodes.size(), {});
  std::vector<int> indegree(dag.nodes.size(), 0);
  for (int v : ids) {
    const ArcKey& a = vars[v].arc;
    DagArc arc{dag.node_index({a.i, a.s}), dag.node_index({a.j, a.t}), v};
    dag.out[arc.from].push_back(static_cast<int>(dag.arcs.size()));
    ++indegree[arc.to];
    dag.arcs.push_back(arc);
  }
  // Kahn's algorithm; smallest ready node first keeps the order canonical.
  std::set<int> ready;
  for (int u = 0; u < static_cast<int>(dag.nodes.size()); ++u) {
    if (indegree[u] == 0) ready.insert(u);
  }
  while (!ready.empty()) {
    const int u = *ready.begin();
    ready.erase(ready.begin());
    dag.topo.push_back(u);
    for (int e : dag.out[u]) {
      if (--indegree[dag.arcs[e].to] == 0) ready.insert(dag.arcs[e].to);
    }
  }
  if (dag.topo.size() != dag.nodes.size()) {
    throw InvariantError("variable subset contains a cycle");
  }
  return dag;
}

namespace {

Path longest_alive(const Dag& dag, const std::vector<char>& node_alive,
                   const std::vector<char>& arc_alive) {
  const int n = static_cast<int>(dag.nodes.size());
  std::vector<int> len(n, 0);
  std::vector<int> next_arc(n, -1);
  for (auto it = dag.topo.rbegin(); it != dag.topo.rend(); ++it) {
    const int u = *it;
    if (!node_alive[u]) continue;
    for (int e : dag.out[u]) {
      if (!arc_alive[e] || !node_alive[dag.arcs[e].to]) continue;
      const int v = dag.arcs[e].to;
      const int cand = len[v] + 1;
      // Equal lengths: the smaller successor tuple gives the smaller sequence.
      if (cand > len[u] || (cand == len[u] && next_arc[u] >= 0 && v < dag.arcs[next_arc[u]].to)) {
        len[u] = cand;
        next_arc[u] = e;
      }
    }
  }
  int start = -1;
  for (int u = 0; u < n; ++u) {
    if (!node_alive[u] || len[u] == 0) continue;
    if (start < 0 || len[u] > len[start] ||
        (len[u] == len[start] &&
         std::pair{dag.nodes[u].time, dag.nodes[u].node} <
             std::pair{dag.nodes[start].time, dag.nodes[start].node})) {
      start = u;
    }
  }
  Path p;
  if (start < 0) return p;
  int u = start;
  p.tuples.push_back(dag.nodes[u]);
  std::set<int> visited{dag.nodes[u].node};
  while (next_arc[u] >= 0) {
    const DagArc& a = dag.arcs[next_arc[u]];
    // A customer may own several time nodes; stop before a second visit.
    const int c = dag.nodes[a.to].node;
    if (c != 0 && c != dag.sink && !visited.insert(c).second) break;
    p.arcs.push_back(a.var);
    u = a.to;
    p.tuples.push_back(dag.nodes[u]);
  }
  return p;
}

}  // namespace

Path longest_path(const Dag& dag) {
  return longest_alive(dag, std::vector<char>(dag.nodes.size(), 1),
                       std::vector<char>(dag.arcs.size(), 1));
}

std::vector<Path> extract_disjoint_paths(const Dag& dag, PathStrategy strategy) {
  std::vector<char> node_alive(dag.nodes.size(), 1);
  std::vector<char> arc_alive(dag.arcs.size(), 1);
  std::vector<Path> paths;
  while (true) {
    Path p = longest_alive(dag, node_alive, arc_alive);
    if (p.empty()) break;
    for (const Tuple& t : p.tuples) {
      if (t.node == 0 || t.node == dag.sink) continue;
      for (std::size_t u = 0; u < dag.nodes.size(); ++u) {
        if (dag.nodes[u].node == t.node) node_alive[u] = 0;
      }
    }
    for (int v : p.arcs) {
      for (std::size_t e = 0; e < dag.arcs.size(); ++e) {
        if (dag.arcs[e].var == v) arc_alive[e] = 0;
      }
    }
    paths.push_back(std::move(p));
    if (strategy == PathStrategy::single) break;
  }
  return paths;
}

bool customer_disjoint(std::span<const Path> paths, int num_customers) {
  std::vector<char> seen(num_customers + 1, 0);
  for (const auto& p : paths) {
    for (const auto& t : p.tuples) {
      if (t.node < 1 || t.node > num_customers) continue;
      if (seen[t.node]) return false;
      seen[t.node] = 1;
    }
  }
  return true;
}

void write_dot(std::ostream& out, const Dag& dag, std::span<const Path> highlight) {
  std::set<int> marked;
  for (const auto& p : highlight) marked.insert(p.arcs.begin(), p.arcs.end());
  auto label = [&](const Tuple& t) {
    return "(" + node_label(t.node, dag.sink) + "," + format_double(t.time) + ")";
  };
  out << "digraph dag {\n  rankdir=LR;\n";
  for (std::size_t u = 0; u < dag.nodes.size(); ++u) {
    out << "  n" << u << " [label=\"" << label(dag.nodes[u]) << "\"];\n";
  }
  for (const auto& a : dag.arcs) {
    out << "  n" << a.from << " -> n" << a.to << " [label=\"x" << a.var << "\"";
    if (marked.count(a.var)) out << ", color=blue, penwidth=2";
    out << "];\n";
  }
  out << "}\n";
}

}  // namespace fsvrptw
