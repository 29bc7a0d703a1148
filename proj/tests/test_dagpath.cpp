#include <doctest.h>

#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "fsvrptw/dagpath.hpp"
#include "fsvrptw/errors.hpp"
#include "support.hpp"

using namespace fsvrptw;
using namespace fsvrptw::testing;

namespace {

// Arcs between integer-timed tuples; time strictly increases along an arc.
VariableSet arcs_set(int num_nodes, std::vector<ArcKey> arcs) {
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
  std::vector<Variable> vars;
  for (const auto& a : arcs) vars.push_back(Variable{a, VarStatus::active, PreRule::none});
  return VariableSet(num_nodes, std::move(vars));
}

std::vector<int> all_ids(const VariableSet& v) {
  std::vector<int> ids(v.size());
  for (int k = 0; k < v.size(); ++k) ids[k] = k;
  return ids;
}

// Longest path by brute-force DFS from every node.
int brute_longest(const Dag& dag) {
  std::function<int(int)> depth = [&](int u) {
    int best = 0;
    for (int a : dag.out[u]) best = std::max(best, 1 + depth(dag.arcs[a].to));
    return best;
  };
  int best = 0;
  for (int u = 0; u < static_cast<int>(dag.nodes.size()); ++u) best = std::max(best, depth(u));
  return best;
}

bool path_in_dag(const Dag& dag, const Path& p) {
  for (std::size_t k = 0; k < p.arcs.size(); ++k) {
    bool found = false;
    for (const auto& a : dag.arcs) {
      if (a.var == p.arcs[k] && dag.nodes[a.from] == p.tuples[k] && dag.nodes[a.to] == p.tuples[k + 1]) {
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("dagpath") {
  TEST_CASE("initial DAG of the running example: 8 nodes, 10 arcs") {
    const Model m = running_example();
    const Dag dag = build_dag(m.vars, m.vars.active_ids(), m.sub.sink());
    CHECK(dag.nodes.size() == 8);
    CHECK(dag.arcs.size() == 10);
    CHECK(dag.topo.size() == 8);
    CHECK(dag.node_index({0, 0.0}) >= 0);
    CHECK(dag.node_index({1, 5.0}) == -1);
  }

  TEST_CASE("empty and singleton subsets") {
    const Model m = running_example();
    const Dag empty = build_dag(m.vars, {}, m.sub.sink());
    CHECK(empty.nodes.empty());
    CHECK(longest_path(empty).empty());
    CHECK(extract_disjoint_paths(empty).empty());
    const std::vector<int> one{var_id(m, 0, 0, 1, 1)};
    const Dag single = build_dag(m.vars, one, m.sub.sink());
    CHECK(single.nodes.size() == 2);
    CHECK(single.arcs.size() == 1);
    const Path p = longest_path(single);
    CHECK(p.arcs == one);
    CHECK(p.tuples == std::vector<Tuple>{{0, 0.0}, {1, 1.0}});
  }

  TEST_CASE("walkthrough selection: longest path and the two extracted paths") {
    const Model m = running_example();
    std::vector<int> sel{var_id(m, 1, 1, -1, 2), var_id(m, 0, 0, 2, 3), var_id(m, 2, 3, -1, 3)};
    std::sort(sel.begin(), sel.end());
    const Dag dag = build_dag(m.vars, sel, m.sub.sink());
    const int sink = m.sub.sink();
    const Path lp = longest_path(dag);
    CHECK(lp.tuples == std::vector<Tuple>{{0, 0.0}, {2, 3.0}, {sink, 3.0}});
    const auto q = extract_disjoint_paths(dag);
    REQUIRE(q.size() == 2);
    CHECK(q[0].tuples == lp.tuples);
    CHECK(q[1].tuples == std::vector<Tuple>{{1, 1.0}, {sink, 2.0}});
    CHECK(customer_disjoint(q, m.sub.num_customers()));
    const auto single = extract_disjoint_paths(dag, PathStrategy::single);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == lp);
  }

  TEST_CASE("chain plus a disjoint arc: the chain wins") {
    // 0@0 -> 1@1 -> 2@2 -> 3@3 -> 5@4, plus 4@1 -> 5@2.
    const VariableSet v = arcs_set(6, {{0, 0, 1, 1}, {1, 1, 2, 2}, {2, 2, 3, 3}, {3, 3, 5, 4}, {4, 1, 5, 2}});
    const Dag dag = build_dag(v, all_ids(v), 5);
    const Path p = longest_path(dag);
    CHECK(p.arcs.size() == 4);
    CHECK(p.front() == Tuple{0, 0.0});
    const auto q = extract_disjoint_paths(dag);
    REQUIRE(q.size() == 2);
    CHECK(q[1].arcs.size() == 1);
  }

  TEST_CASE("a single chain comes back as one path") {
    const VariableSet v = arcs_set(5, {{0, 0, 1, 1}, {1, 1, 2, 2}, {2, 2, 3, 3}, {3, 3, 4, 4}});
    const auto q = extract_disjoint_paths(build_dag(v, all_ids(v), 4));
    REQUIRE(q.size() == 1);
    CHECK(q[0].arcs.size() == 4);
  }

  TEST_CASE("two parallel depot-customer-sink chains are both returned") {
    const VariableSet v = arcs_set(4, {{0, 0, 1, 1}, {1, 1, 3, 2}, {0, 0, 2, 1}, {2, 1, 3, 2}});
    const auto q = extract_disjoint_paths(build_dag(v, all_ids(v), 3));
    REQUIRE(q.size() == 2);
    CHECK(customer_disjoint(q, 2));
    // Depot tuples are shared by both.
    CHECK(q[0].front() == q[1].front());
    CHECK(q[0].back() == q[1].back());
  }

  TEST_CASE("ties go to the earliest start, then the smallest tuple sequence") {
    const VariableSet v = arcs_set(5, {{1, 2, 2, 3}, {3, 1, 4, 2}, {2, 1, 4, 2}});
    const Path p = longest_path(build_dag(v, all_ids(v), 4));
    CHECK(p.front() == Tuple{2, 1.0});
  }

  TEST_CASE("a cycle is an invariant violation") {
    const VariableSet v = arcs_set(4, {{1, 1, 2, 1}, {2, 1, 1, 1}});
    CHECK_THROWS_AS(build_dag(v, all_ids(v), 3), InvariantError);
  }

  TEST_CASE("DOT dump") {
    const Model m = running_example();
    const Dag dag = build_dag(m.vars, m.vars.active_ids(), m.sub.sink());
    const auto q = extract_disjoint_paths(dag);
    std::ostringstream out;
    write_dot(out, dag, q);
    CHECK(out.str().rfind("digraph", 0) == 0);
    CHECK(out.str().find("N") != std::string::npos);
  }

  TEST_CASE("a path never visits a customer twice") {
    // 0@0 -> 1@1 -> 2@2 -> 1@3 -> 3@4: customer 1 owns two time nodes.
    const VariableSet v = arcs_set(4, {{0, 0, 1, 1}, {1, 1, 2, 2}, {2, 2, 1, 3}, {1, 3, 3, 4}});
    const Dag dag = build_dag(v, all_ids(v), 3);
    const Path p = longest_path(dag);
    CHECK(p.tuples == std::vector<Tuple>{{0, 0.0}, {1, 1.0}, {2, 2.0}});
    const auto q = extract_disjoint_paths(dag);
    CHECK(customer_disjoint(q, 2));
    for (const Path& r : q) CHECK(path_in_dag(dag, r));
  }

  TEST_CASE("random DAGs up to 12 nodes: DP equals exhaustive search, paths disjoint and real") {
    // One departure time per customer, as in a single-point grid.
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 600; ++trial) {
      const int customers = 2 + static_cast<int>(rng() % 8);
      const int sink = customers + 1;
      std::vector<double> time(customers + 2, 0.0);
      for (int c = 1; c <= customers; ++c) time[c] = 1.0 + static_cast<double>(rng() % 5);
      std::vector<ArcKey> arcs;
      const int m = 1 + static_cast<int>(rng() % 20);
      for (int k = 0; k < m; ++k) {
        const int i = static_cast<int>(rng() % (customers + 1));  // 0..customers
        const int j = 1 + static_cast<int>(rng() % (customers + 1));  // 1..sink
        const double t = j == sink ? time[i] + 1.0 : time[j];
        if (j == i || t <= time[i]) continue;
        arcs.push_back({i, time[i], j, t});
      }
      if (arcs.empty()) continue;
      const VariableSet v = arcs_set(customers + 2, arcs);
      const Dag dag = build_dag(v, all_ids(v), sink);
      if (dag.nodes.size() > 12) continue;
      ++checked;
      CHECK(static_cast<int>(longest_path(dag).arcs.size()) == brute_longest(dag));
      const auto q = extract_disjoint_paths(dag);
      CHECK(customer_disjoint(q, customers));
      for (const Path& p : q) CHECK(path_in_dag(dag, p));
    }
    CHECK(checked >= 200);
  }
}
