#include "fsvrptw/greedy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "fsvrptw/format.hpp"

namespace fsvrptw {

std::vector<int> select_variables(std::span<const double> exps, std::span<const int> var_ids,
                                  double theta, SelectMode mode) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ArgumentError("theta must lie strictly between 0 and 1, got " + format_double(theta));
  }
  if (exps.size() != var_ids.size()) throw ArgumentError("expectations and variables differ in size");
  std::vector<int> picked;
  if (mode == SelectMode::threshold) {
    for (std::size_t k = 0; k < exps.size(); ++k) {
      if (exps[k] >= theta) picked.push_back(var_ids[k]);
    }
  } else {
    const std::size_t n = exps.size();
    // The epsilon keeps 0.9 * 10 from rounding up to 10.
    const auto count = static_cast<std::size_t>(std::ceil(theta * static_cast<double>(n) - 1e-9));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (exps[a] != exps[b]) return exps[a] > exps[b];
      return var_ids[a] < var_ids[b];
    });
    for (std::size_t k = 0; k < std::min(count, n); ++k) picked.push_back(var_ids[order[k]]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::string_view position_name(TuplePosition p) {
  switch (p) {
    case TuplePosition::interior: return "interior";
    case TuplePosition::start_depot: return "start_depot";
    case TuplePosition::start_customer: return "start_customer";
    case TuplePosition::end_depot: return "end_depot";
    case TuplePosition::end_customer: return "end_customer";
  }
  return "?";
}

namespace {

void remove_flow(Model& m, const Tuple& t) {
  const int f = m.cons.flow_index(t.node, t.time);
  if (f >= 0) m.cons.flow[f].removed = true;
}

Path join(const Path& a, const Path& b) {
  if (a.back() != b.front()) throw InvariantError("paths joined at mismatched tuples");
  Path out = a;
  out.tuples.insert(out.tuples.end(), b.tuples.begin() + 1, b.tuples.end());
  out.arcs.insert(out.arcs.end(), b.arcs.begin(), b.arcs.end());
  return out;
}

}  // namespace

void concat(PathState& state, Model& m, const Path& p) {
  auto& S = state.paths;
  int pred = -1;
  int succ = -1;
  if (m.sub.is_customer(p.front().node)) {
    for (int k = 0; k < static_cast<int>(S.size()); ++k) {
      if (S[k].back().node == p.front().node) {
        pred = k;
        break;
      }
    }
  }
  if (m.sub.is_customer(p.back().node)) {
    for (int k = 0; k < static_cast<int>(S.size()); ++k) {
      if (S[k].front().node == p.back().node) {
        succ = k;
        break;
      }
    }
  }
  if (pred >= 0 && pred == succ) {
    throw InvariantError("joining a path to both ends of the same route would close a cycle");
  }
  Path merged = p;
  if (pred >= 0) {
    merged = join(S[pred], merged);
    remove_flow(m, p.front());
  }
  if (succ >= 0) {
    merged = join(merged, S[succ]);
    remove_flow(m, p.back());
    m.cons.coverage_of(p.back().node).removed = true;
  }
  if (pred < 0 && succ < 0) {
    S.push_back(std::move(merged));
    return;
  }
  const int keep = pred >= 0 && succ >= 0 ? std::min(pred, succ) : std::max(pred, succ);
  const int drop = pred >= 0 && succ >= 0 ? std::max(pred, succ) : -1;
  S[keep] = std::move(merged);
  if (drop >= 0) S.erase(S.begin() + drop);
}

namespace {

class PathPruner {
 public:
  PathPruner(PathState& state, Model& m, const Path& p) : state_(state), m_(m), p_(p) {}

  int run() {
    const int last = static_cast<int>(p_.arcs.size());
    for (int k = 0; k <= last; ++k) tuple(k, last);
    return fixed_;
  }

 private:
  void fix(int k, int var, int value, TuplePosition pos, const char* rule) {
    if (m_.vars[var].status != VarStatus::active) return;
    m_.fix(var, value);
    state_.log.push_back({state_.iteration, k, p_.tuples[k], var, value, pos, rule});
    ++fixed_;
  }

  // Rule 1: outgoing arcs of the tuple's customer. `full` adds 1b.
  void outgoing(int k, TuplePosition pos, bool full) {
    const Tuple& here = p_.tuples[k];
    const bool has_next = k < static_cast<int>(p_.arcs.size());
    for (int v : m_.vars.out_of(here.node)) {
      const ArcKey& a = m_.vars[v].arc;
      if (a.s != here.time) {
        fix(k, v, 0, pos, "1a");
      } else if (full && (!has_next || Tuple{a.j, a.t} != p_.tuples[k + 1])) {
        fix(k, v, 0, pos, "1b");
      }
    }
  }

  // Rule 2: incoming arcs of the tuple's customer. `full` adds 2b.
  void incoming(int k, TuplePosition pos, bool full) {
    const Tuple& here = p_.tuples[k];
    for (int v : m_.vars.into(here.node)) {
      const ArcKey& a = m_.vars[v].arc;
      if (a.t != here.time) {
        fix(k, v, 0, pos, "2a");
      } else if (full && (k == 0 || Tuple{a.i, a.s} != p_.tuples[k - 1])) {
        fix(k, v, 0, pos, "2b");
      }
    }
  }

  void tuple(int k, int last) {
    const Tuple& here = p_.tuples[k];
    const int sink = m_.sub.sink();
    TuplePosition pos = TuplePosition::interior;
    if (k == 0) pos = here.node == 0 ? TuplePosition::start_depot : TuplePosition::start_customer;
    if (k == last) pos = here.node == sink ? TuplePosition::end_depot : TuplePosition::end_customer;
    if (k < last) fix(k, p_.arcs[k], 1, pos, "along_path");
    switch (pos) {
      case TuplePosition::interior:
        outgoing(k, pos, true);
        incoming(k, pos, true);
        remove_flow(m_, here);
        break;
      case TuplePosition::start_depot:
        break;
      case TuplePosition::start_customer:
        outgoing(k, pos, true);
        incoming(k, pos, false);
        break;
      case TuplePosition::end_depot:
        // Routes may reach the sink at different times, so nothing is pruned.
        break;
      case TuplePosition::end_customer:
        incoming(k, pos, true);
        outgoing(k, pos, false);
        break;
    }
    if (k != 0 && m_.sub.is_customer(here.node)) m_.cons.coverage_of(here.node).removed = true;
  }

  PathState& state_;
  Model& m_;
  const Path& p_;
  int fixed_ = 0;
};

}  // namespace

int prune(PathState& state, Model& m, std::span<const Path> q) {
  int fixed = 0;
  for (const Path& p : q) {
    if (p.empty()) continue;
    concat(state, m, p);
    fixed += PathPruner(state, m, p).run();
  }
  return fixed;
}

bool interior_customers_pruned(const Model& m, std::span<const Path> paths) {
  for (const Path& p : paths) {
    for (std::size_t k = 1; k + 1 < p.tuples.size(); ++k) {
      const int c = p.tuples[k].node;
      if (!m.sub.is_customer(c)) continue;
      for (int v : m.vars.out_of(c)) {
        if (m.vars[v].status == VarStatus::active) return false;
      }
      for (int v : m.vars.into(c)) {
        if (m.vars[v].status == VarStatus::active) return false;
      }
    }
  }
  return true;
}

void validate(const GreedyConfig& c) {
  if (!(c.theta > 0.0 && c.theta < 1.0)) {
    throw ArgumentError("theta must lie strictly between 0 and 1, got " + format_double(c.theta));
  }
  if (c.reads < 1) throw ArgumentError("reads must be at least 1");
  if (c.sweeps < 1) throw ArgumentError("sweeps must be at least 1");
  if (c.max_iterations < 1) throw ArgumentError("max_iterations must be at least 1");
  if (c.patience < 1) throw ArgumentError("patience must be at least 1");
  if (c.exact_threshold < 0) throw ArgumentError("exact_threshold must be non-negative");
}

nlohmann::json to_json(const GreedyConfig& c) {
  return {{"theta", c.theta},
          {"mode", c.mode == SelectMode::fraction ? "fraction" : "threshold"},
          {"strategy", c.strategy == PathStrategy::multiple ? "multiple" : "single"},
          {"reads", c.reads},
          {"sweeps", c.sweeps},
          {"max_iterations", c.max_iterations},
          {"patience", c.patience},
          {"exact_threshold", c.exact_threshold},
          {"exact_fallback", c.exact_fallback},
          {"seed", c.seed}};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t iteration_seed(std::uint64_t seed, int l) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(l)));
}

}  // namespace

Solution run_greedy(Model m, Sampler& sampler, const GreedyConfig& config,
                    GreedyObserver* observer) {
  validate(config);
  using clock = std::chrono::steady_clock;
  Solution sol;
  sol.seed = config.seed;
  PathState state;
  ExactSampler fallback(ExactOptions{config.exact_threshold, std::nullopt});
  int sweeps = config.sweeps;
  bool boosted = false;
  int idle = 0;

  for (int l = 0;; ++l) {
    const int active = m.vars.active_count();
    sol.active_history.push_back(active);
    if (active == 0) break;
    if (l >= config.max_iterations) {
      throw StallError("iteration limit reached with " + std::to_string(active) +
                           " active variables",
                       sol.trace);
    }
    bool use_fallback = false;
    if (idle >= config.patience) {
      if (config.exact_fallback && !sampler.is_exact() && active <= config.exact_threshold) {
        use_fallback = true;
      } else if (!boosted) {
        sweeps *= 4;
        boosted = true;
        idle = 0;
      } else {
        throw StallError("no progress after " + std::to_string(config.patience) +
                             " iterations with " + std::to_string(active) + " active variables",
                         sol.trace);
      }
    }

    const auto t0 = clock::now();
    const Subproblem sp = compile_qubo(m);
    Sampler& backend = use_fallback ? static_cast<Sampler&>(fallback) : sampler;
    SampleSet ss;
    try {
      ss = backend.sample(m, sp, SampleRequest{config.reads, sweeps, iteration_seed(config.seed, l)});
    } catch (const InfeasibleError& e) {
      throw StallError(std::string("remaining subproblem is infeasible: ") + e.what(), sol.trace);
    }
    const std::vector<double> exps = one_body_expectations(ss);
    std::vector<int> selected =
        use_fallback ? select_variables(exps, sp.var_ids, 0.5, SelectMode::threshold)
                     : select_variables(exps, sp.var_ids, config.theta, config.mode);
    const Dag dag = build_dag(m.vars, selected, m.sub.sink());
    const std::vector<Path> q = extract_disjoint_paths(dag, config.strategy);
    if (observer) observer->after_dag(dag, q);

    state.iteration = l;
    int pruned = prune(state, m, q);
    if (use_fallback) {
      // The exact assignment already satisfies every surviving constraint;
      // whatever it left at zero is settled too.
      for (std::size_t k = 0; k < sp.var_ids.size(); ++k) {
        const int v = sp.var_ids[k];
        if (m.vars[v].status != VarStatus::active) continue;
        if (ss.bits[k]) throw InvariantError("exact assignment left an arc outside every path");
        m.fix(v, 0);
        state.log.push_back({l, -1, Tuple{m.vars[v].arc.i, m.vars[v].arc.s}, v, 0,
                             TuplePosition::interior, "fallback"});
        ++pruned;
      }
      sol.used_fallback = true;
    }
    if (observer) observer->after_prune(m, state, q);
    idle = pruned > 0 ? 0 : idle + 1;

    IterationRecord rec;
    rec.l = l;
    rec.active_count = active;
    rec.selected_count = static_cast<int>(selected.size());
    rec.paths_found = static_cast<int>(q.size());
    rec.best_energy = *std::min_element(ss.energies.begin(), ss.energies.end());
    rec.pruned = pruned;
    rec.source = use_fallback ? "fallback" : backend.name();
    if (config.record_timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    }
    sol.trace.push_back(rec);
  }

  sol.iterations = static_cast<int>(sol.trace.size());
  sol.prune_log = std::move(state.log);
  for (const Path& p : state.paths) {
    if (p.front() != Tuple{0, 0.0} || p.back().node != m.sub.sink()) {
      throw StallError("a route is not anchored at both depots", sol.trace);
    }
  }
  sol.routes = std::move(state.paths);
  sol.objective = static_cast<int>(sol.routes.size());
  sol.feasible = validate_solution(sol.routes, sol.objective, m.sub, &m.grid).feasible;
  return sol;
}

FeasibilityReport validate_solution(std::span<const Path> routes, int objective,
                                    const SubInstance& sub, const TimeGrid* grid) {
  FeasibilityReport rep;
  rep.objective = objective;
  const int sink = sub.sink();
  auto fail = [&](std::string msg) {
    rep.feasible = false;
    rep.violations.push_back(std::move(msg));
  };
  std::vector<int> visits(sub.num_customers() + 1, 0);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const Path& p = routes[r];
    const std::string name = "route " + std::to_string(r);
    if (p.tuples.size() < 2) {
      fail(name + " has no arcs");
      continue;
    }
    if (p.front() != Tuple{0, 0.0}) fail(name + " does not start at (0,0)");
    if (p.back().node != sink) fail(name + " does not end at the final depot");
    for (std::size_t k = 1; k + 1 < p.tuples.size(); ++k) {
      const int c = p.tuples[k].node;
      if (!sub.is_customer(c)) {
        fail(name + " passes through depot node " + node_label(c, sink));
        continue;
      }
      ++visits[c];
    }
    if (grid) {
      for (const Tuple& t : p.tuples) {
        if (!std::binary_search(grid->points.begin(), grid->points.end(), t.time)) {
          fail(name + " uses time " + format_double(t.time) + " outside the grid");
        }
      }
    }
    // Discrete check on each arc, then continuous propagation with waiting.
    double depart = 0.0;
    for (std::size_t k = 0; k + 1 < p.tuples.size(); ++k) {
      const Tuple& a = p.tuples[k];
      const Tuple& b = p.tuples[k + 1];
      if (a.node < 0 || a.node >= sub.num_nodes() || b.node < 0 || b.node >= sub.num_nodes()) {
        fail(name + " references an unknown node");
        break;
      }
      const double bij = earliest_service_start(a.node, a.time, b.node, sub);
      if (bij > sub.due(b.node)) {
        fail(name + ": leaving " + node_label(a.node, sink) + " at " + format_double(a.time) +
             " reaches " + node_label(b.node, sink) + " no earlier than " + format_double(bij) +
             " > " + format_double(sub.due(b.node)));
      }
      const double arrive = depart + sub.d(a.node, b.node);
      const double start = std::max(sub.ready(b.node), arrive);
      if (start > sub.due(b.node)) {
        fail("time window violated at customer " + node_label(b.node, sink) + " on " + name +
             ": arrival " + format_double(arrive) + " > " + format_double(sub.due(b.node)));
      }
      depart = start + sub.service(b.node);
    }
  }
  for (int j = 1; j <= sub.num_customers(); ++j) {
    if (visits[j] == 0) fail("coverage violated for customer " + std::to_string(j) + ": not visited");
    if (visits[j] > 1) {
      fail("coverage violated for customer " + std::to_string(j) + ": visited " +
           std::to_string(visits[j]) + " times");
    }
  }
  if (objective != static_cast<int>(routes.size())) {
    fail("objective " + std::to_string(objective) + " differs from route count " +
         std::to_string(routes.size()));
  }
  return rep;
}

nlohmann::json route_json(const Path& p, int sink) {
  nlohmann::json r = nlohmann::json::array();
  for (const Tuple& t : p.tuples) {
    nlohmann::json node = t.node == sink ? nlohmann::json("N") : nlohmann::json(t.node);
    r.push_back({node, t.time});
  }
  return r;
}

nlohmann::json trace_record_json(const IterationRecord& r) {
  return {{"l", r.l},
          {"active_count", r.active_count},
          {"selected_count", r.selected_count},
          {"paths_found", r.paths_found},
          {"best_energy", r.best_energy},
          {"wall_ms", r.wall_ms}};
}

void write_trace_jsonl(std::ostream& out, std::span<const IterationRecord> trace) {
  for (const auto& r : trace) out << trace_record_json(r).dump() << '\n';
}

}  // namespace fsvrptw
