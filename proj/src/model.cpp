#include "fsvrptw/model.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "fsvrptw/errors.hpp"
#include "fsvrptw/format.hpp"

namespace fsvrptw {

std::string_view rule_name(PreRule r) {
  switch (r) {
    case PreRule::none: return "";
    case PreRule::enters_origin: return "enters_origin";
    case PreRule::leaves_sink: return "leaves_sink";
    case PreRule::origin_late: return "origin_late";
    case PreRule::late_service: return "late_service";
    case PreRule::early_departure: return "early_departure";
    case PreRule::self_loop: return "self_loop";
    case PreRule::customer_at_zero: return "customer_at_zero";
    case PreRule::arrive_at_zero: return "arrive_at_zero";
    case PreRule::origin_to_sink: return "origin_to_sink";
    case PreRule::off_grid: return "off_grid";
    case PreRule::no_advance: return "no_advance";
  }
  return "?";
}

std::string_view status_name(VarStatus s) {
  switch (s) {
    case VarStatus::active: return "active";
    case VarStatus::fixed0: return "fixed0";
    case VarStatus::fixed1: return "fixed1";
  }
  return "?";
}

Penalties default_penalties(int num_customers) {
  const double p = 2.0 * num_customers + 1.0;
  return {p, p};
}

double earliest_service_start(int i, double s, int j, const SubInstance& sub) {
  return std::max(sub.ready(j), s + sub.d(i, j));
}

namespace {

bool contains(const std::vector<double>& sorted, double v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

// Rules that need neither the grid nor the timetable.
PreRule structural_rule(const ArcKey& a, int sink) {
  if (a.j == 0) return PreRule::enters_origin;
  if (a.i == sink) return PreRule::leaves_sink;
  if (a.i == 0 && a.s != 0.0) return PreRule::origin_late;
  if (a.i == a.j) return PreRule::self_loop;
  if (a.i != 0 && a.s == 0.0) return PreRule::customer_at_zero;
  if (a.t == 0.0) return PreRule::arrive_at_zero;
  if (a.i == 0 && a.j == sink) return PreRule::origin_to_sink;
  if (a.t <= a.s) return PreRule::no_advance;
  return PreRule::none;
}

PreRule timing_rule(const ArcKey& a, const SubInstance& sub) {
  const double b = earliest_service_start(a.i, a.s, a.j, sub);
  if (b > sub.due(a.j)) return PreRule::late_service;
  if (a.t < b + sub.service(a.j)) return PreRule::early_departure;
  return PreRule::none;
}

void check_coverage_reachable(const VariableSet& vs, const SubInstance& sub) {
  for (int j = 1; j <= sub.num_customers(); ++j) {
    if (vs.into(j).empty()) {
      throw InfeasibleError("coverage(" + std::to_string(j) + ")",
                            "customer " + std::to_string(j) + " has no feasible incoming arc");
    }
  }
}

}  // namespace

PreRule exclusion_rule(const ArcKey& arc, const SubInstance& sub, const TimeGrid& grid) {
  if (PreRule r = structural_rule(arc, sub.sink()); r != PreRule::none) return r;
  if (!contains(grid.departures[arc.i], arc.s) || !contains(grid.departures[arc.j], arc.t)) {
    return PreRule::off_grid;
  }
  return timing_rule(arc, sub);
}

VariableSet::VariableSet(int num_nodes, std::vector<Variable> vars)
    : vars_(std::move(vars)), out_(num_nodes), in_(num_nodes) {
  for (int k = 0; k < size(); ++k) {
    if (k > 0 && !(vars_[k - 1].arc < vars_[k].arc)) {
      throw InvariantError("variables must be strictly increasing in (i, s, j, t)");
    }
    out_[vars_[k].arc.i].push_back(k);
    in_[vars_[k].arc.j].push_back(k);
  }
}

int VariableSet::active_count() const {
  return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) {
    return v.status == VarStatus::active;
  }));
}

std::vector<int> VariableSet::active_ids() const {
  std::vector<int> ids;
  for (int k = 0; k < size(); ++k) {
    if (vars_[k].status == VarStatus::active) ids.push_back(k);
  }
  return ids;
}

std::optional<int> VariableSet::find(const ArcKey& arc) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), arc,
                             [](const Variable& v, const ArcKey& a) { return v.arc < a; });
  if (it == vars_.end() || it->arc != arc) return std::nullopt;
  return static_cast<int>(it - vars_.begin());
}

VariableSet enumerate_variables(const SubInstance& sub, const TimeGrid& grid,
                                const EnumerateOptions& options) {
  const int nodes = sub.num_nodes();
  std::vector<Variable> kept;
  std::vector<Variable> audit;
  if (options.keep_audit) {
    for (int i = 0; i < nodes; ++i) {
      for (double s : grid.points) {
        for (int j = 0; j < nodes; ++j) {
          for (double t : grid.points) {
            ArcKey a{i, s, j, t};
            PreRule r = exclusion_rule(a, sub, grid);
            if (r == PreRule::none) {
              kept.push_back({a, VarStatus::active, PreRule::none});
            } else {
              audit.push_back({a, VarStatus::fixed0, r});
            }
          }
        }
      }
    }
  } else {
    // Off-grid candidates are never kept, so walking departure points only
    // yields the same active set in the same order.
    for (int i = 0; i < nodes; ++i) {
      for (double s : grid.departures[i]) {
        for (int j = 0; j < nodes; ++j) {
          for (double t : grid.departures[j]) {
            ArcKey a{i, s, j, t};
            if (exclusion_rule(a, sub, grid) == PreRule::none) {
              kept.push_back({a, VarStatus::active, PreRule::none});
            }
          }
        }
      }
    }
  }
  VariableSet vs(nodes, std::move(kept));
  vs.audit = std::move(audit);
  check_coverage_reachable(vs, sub);
  return vs;
}

VariableSet variables_from_arcs(const SubInstance& sub, const TimeGrid& grid,
                                const std::vector<ArcKey>& arcs) {
  std::vector<ArcKey> sorted = arcs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Variable> kept;
  for (const auto& a : sorted) {
    if (a.i < 0 || a.j < 0 || a.i >= sub.num_nodes() || a.j >= sub.num_nodes()) {
      throw ArgumentError("arc references an unknown node");
    }
    // Hand-drawn examples may end a route at the tuple's own time, so the
    // time-advance rule is left to the DAG's cycle check.
    if (PreRule r = structural_rule(a, sub.sink()); r != PreRule::none && r != PreRule::no_advance) {
      throw ArgumentError("arc x_{" + node_label(a.i, sub.sink()) + "," + format_double(a.s) + "," +
                          node_label(a.j, sub.sink()) + "," + format_double(a.t) +
                          "} violates rule " + std::string(rule_name(r)));
    }
    if (!contains(grid.points, a.s) || !contains(grid.points, a.t)) {
      throw ArgumentError("arc time is not a grid point");
    }
    kept.push_back({a, VarStatus::active, PreRule::none});
  }
  VariableSet vs(sub.num_nodes(), std::move(kept));
  check_coverage_reachable(vs, sub);
  return vs;
}

int ConstraintSet::flow_index(int node, double time) const {
  auto it = std::lower_bound(flow.begin(), flow.end(), std::pair{node, time},
                             [](const FlowConstraint& f, const std::pair<int, double>& key) {
                               return std::pair{f.node, f.time} < key;
                             });
  if (it == flow.end() || it->node != node || it->time != time) return -1;
  return static_cast<int>(it - flow.begin());
}

namespace {

void erase_member(std::vector<int>& list, int var) {
  auto it = std::lower_bound(list.begin(), list.end(), var);
  if (it == list.end() || *it != var) throw InvariantError("constraint membership out of sync");
  list.erase(it);
}

}  // namespace

void ConstraintSet::on_fix(int var, const Variable& v, int value) {
  const ArcKey& a = v.arc;
  const int num_customers = static_cast<int>(coverage.size());
  auto customer = [&](int node) { return node >= 1 && node <= num_customers; };
  if (customer(a.j)) {
    auto& c = coverage_of(a.j);
    erase_member(c.vars, var);
    c.offset += value;
    int f = flow_index(a.j, a.t);
    if (f < 0) throw InvariantError("missing flow constraint at arc head");
    erase_member(flow[f].in, var);
    flow[f].in_offset += value;
  }
  if (customer(a.i)) {
    int f = flow_index(a.i, a.s);
    if (f < 0) throw InvariantError("missing flow constraint at arc tail");
    erase_member(flow[f].out, var);
    flow[f].out_offset += value;
  }
  if (a.i == 0) fixed_objective += value;
}

std::string ConstraintSet::coverage_label(int customer) const {
  return "coverage(" + std::to_string(customer) + ")";
}

std::string ConstraintSet::flow_label(int index) const {
  return "flow(" + std::to_string(flow[index].node) + "," + format_double(flow[index].time) + ")";
}

ConstraintSet build_constraints(const VariableSet& vars, const SubInstance& sub) {
  ConstraintSet cs;
  const int n = sub.num_customers();
  cs.coverage.resize(n);
  for (int j = 1; j <= n; ++j) {
    cs.coverage_of(j).customer = j;
    for (int k : vars.into(j)) {
      if (vars[k].status == VarStatus::active) cs.coverage_of(j).vars.push_back(k);
    }
  }
  std::vector<std::pair<int, double>> tuples;
  for (const auto& v : vars.all()) {
    if (v.status != VarStatus::active) continue;
    if (sub.is_customer(v.arc.i)) tuples.emplace_back(v.arc.i, v.arc.s);
    if (sub.is_customer(v.arc.j)) tuples.emplace_back(v.arc.j, v.arc.t);
  }
  std::sort(tuples.begin(), tuples.end());
  tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
  for (const auto& [node, time] : tuples) {
    FlowConstraint f;
    f.node = node;
    f.time = time;
    for (int k : vars.into(node)) {
      if (vars[k].status == VarStatus::active && vars[k].arc.t == time) f.in.push_back(k);
    }
    for (int k : vars.out_of(node)) {
      if (vars[k].status == VarStatus::active && vars[k].arc.s == time) f.out.push_back(k);
    }
    cs.flow.push_back(std::move(f));
  }
  return cs;
}

bool Model::fix(int var, int value) {
  Variable& v = vars[var];
  const VarStatus target = value ? VarStatus::fixed1 : VarStatus::fixed0;
  if (v.status == target) return false;
  if (v.status != VarStatus::active) {
    throw InvariantError("variable " + std::to_string(var) + " already fixed to " +
                         std::string(status_name(v.status)) + ", cannot fix to " +
                         std::to_string(value));
  }
  v.status = target;
  cons.on_fix(var, v, value ? 1 : 0);
  return true;
}

Model build_model(const SubInstance& sub, const TimeGrid& grid, std::optional<Penalties> penalties,
                  const EnumerateOptions& options) {
  Model m;
  m.sub = sub;
  m.grid = grid;
  m.vars = enumerate_variables(sub, grid, options);
  m.cons = build_constraints(m.vars, sub);
  m.penalties = penalties.value_or(default_penalties(sub.num_customers()));
  return m;
}

Model build_model(const Fixture& fixture, std::optional<Penalties> penalties) {
  const SubInstance& sub = fixture.sub;
  if (!fixture.grid) {
    if (fixture.arcs) throw ArgumentError("a fixture with explicit arcs must also give its grid");
    return build_model(sub, build_time_grid(sub), penalties);
  }
  TimeGrid grid;
  grid.points = *fixture.grid;
  std::sort(grid.points.begin(), grid.points.end());
  grid.points.erase(std::unique(grid.points.begin(), grid.points.end()), grid.points.end());
  if (grid.points.empty() || grid.points.front() != 0.0) {
    throw ArgumentError("fixture grid must contain 0");
  }
  grid.departures.assign(sub.num_nodes(), {});
  grid.departures[0] = {0.0};
  if (fixture.arcs) {
    // Hand-specified arcs define which tuples exist.
    for (const auto& a : *fixture.arcs) {
      if (a.i >= 0 && a.i < sub.num_nodes()) grid.departures[a.i].push_back(a.s);
      if (a.j >= 0 && a.j < sub.num_nodes()) grid.departures[a.j].push_back(a.t);
    }
    for (auto& d : grid.departures) {
      std::sort(d.begin(), d.end());
      d.erase(std::unique(d.begin(), d.end()), d.end());
    }
    Model m;
    m.sub = sub;
    m.vars = variables_from_arcs(sub, grid, *fixture.arcs);
    m.grid = std::move(grid);
    m.cons = build_constraints(m.vars, sub);
    m.penalties = penalties.value_or(default_penalties(sub.num_customers()));
    return m;
  }
  for (int j = 1; j <= sub.num_customers(); ++j) {
    grid.departures[j] = usable_departures(sub, j, grid.points);
    if (grid.departures[j].empty()) {
      throw DiscretizationError(j, "customer " + std::to_string(j) +
                                       " has no usable departure on the fixture grid");
    }
  }
  grid.departures[sub.sink()] = {grid.points.back()};
  return build_model(sub, grid, penalties);
}

namespace {

struct Accumulator {
  std::vector<double> linear;
  std::vector<QuadTerm> pairs;
  double offset = 0.0;

  // weight * (sum_k a_k x_k + c)^2 with x_k binary.
  void add_square(const std::vector<std::pair<int, double>>& terms, double c, double weight) {
    for (std::size_t p = 0; p < terms.size(); ++p) {
      const auto [xa, ca] = terms[p];
      linear[xa] += weight * (ca * ca + 2.0 * c * ca);
      for (std::size_t r = p + 1; r < terms.size(); ++r) {
        const auto [xb, cb] = terms[r];
        pairs.push_back({std::min(xa, xb), std::max(xa, xb), 2.0 * weight * ca * cb});
      }
    }
    offset += weight * c * c;
  }
};

}  // namespace

Subproblem compile_qubo(const ConstraintSet& cons, const VariableSet& vars, Penalties penalties) {
  if (!(penalties.coverage > 0.0) || !(penalties.flow > 0.0)) {
    throw ArgumentError("penalty weights must be positive");
  }
  Subproblem sp;
  sp.penalties = penalties;
  sp.var_ids = vars.active_ids();
  std::vector<int> index(vars.size(), -1);
  for (int q = 0; q < static_cast<int>(sp.var_ids.size()); ++q) index[sp.var_ids[q]] = q;

  Accumulator acc;
  acc.linear.assign(sp.var_ids.size(), 0.0);
  acc.offset = cons.fixed_objective;
  for (int q = 0; q < static_cast<int>(sp.var_ids.size()); ++q) {
    if (vars[sp.var_ids[q]].arc.i == 0) acc.linear[q] += 1.0;
  }
  std::vector<std::pair<int, double>> terms;
  for (const auto& c : cons.coverage) {
    if (c.removed) continue;
    terms.clear();
    for (int k : c.vars) terms.emplace_back(index[k], 1.0);
    acc.add_square(terms, c.offset - 1.0, penalties.coverage);
  }
  for (const auto& f : cons.flow) {
    if (f.removed) continue;
    terms.clear();
    for (int k : f.in) terms.emplace_back(index[k], 1.0);
    for (int k : f.out) terms.emplace_back(index[k], -1.0);
    acc.add_square(terms, static_cast<double>(f.in_offset - f.out_offset), penalties.flow);
  }

  std::sort(acc.pairs.begin(), acc.pairs.end(), [](const QuadTerm& x, const QuadTerm& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  Qubo& qb = sp.qubo;
  qb.n = static_cast<int>(sp.var_ids.size());
  qb.linear = std::move(acc.linear);
  qb.offset = acc.offset;
  for (const auto& t : acc.pairs) {
    if (!qb.quadratic.empty() && qb.quadratic.back().a == t.a && qb.quadratic.back().b == t.b) {
      qb.quadratic.back().coeff += t.coeff;
    } else {
      qb.quadratic.push_back(t);
    }
  }
  std::erase_if(qb.quadratic, [](const QuadTerm& t) { return t.coeff == 0.0; });
  return sp;
}

namespace {

// Value of every variable in the model under a partial assignment of the
// listed ids; other variables take their fixed value (active ones read 0).
std::vector<std::uint8_t> full_assignment(const Model& m, std::span<const int> var_ids,
                                          std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> value(m.vars.size(), 0);
  for (int k = 0; k < m.vars.size(); ++k) value[k] = m.vars[k].status == VarStatus::fixed1;
  for (std::size_t q = 0; q < var_ids.size(); ++q) value[var_ids[q]] = bits[q] ? 1 : 0;
  return value;
}

struct Residuals {
  int objective = 0;
  std::vector<int> coverage;  // per surviving coverage constraint
  std::vector<int> flow;      // per surviving flow constraint
};

Residuals residuals(const Model& m, const std::vector<std::uint8_t>& value) {
  Residuals r;
  for (int k : m.vars.out_of(0)) r.objective += value[k];
  for (const auto& c : m.cons.coverage) {
    if (c.removed) continue;
    int sum = 0;
    for (int k : m.vars.into(c.customer)) sum += value[k];
    r.coverage.push_back(sum - 1);
  }
  for (const auto& f : m.cons.flow) {
    if (f.removed) continue;
    int in = 0;
    int out = 0;
    for (int k : m.vars.into(f.node)) {
      if (m.vars[k].arc.t == f.time) in += value[k];
    }
    for (int k : m.vars.out_of(f.node)) {
      if (m.vars[k].arc.s == f.time) out += value[k];
    }
    r.flow.push_back(in - out);
  }
  return r;
}

}  // namespace

double constraint_energy(const Model& m, std::span<const int> var_ids,
                         std::span<const std::uint8_t> bits) {
  Residuals r = residuals(m, full_assignment(m, var_ids, bits));
  double e = r.objective;
  for (int v : r.coverage) e += m.penalties.coverage * v * v;
  for (int v : r.flow) e += m.penalties.flow * v * v;
  return e;
}

bool satisfies_constraints(const Model& m, std::span<const int> var_ids,
                           std::span<const std::uint8_t> bits) {
  Residuals r = residuals(m, full_assignment(m, var_ids, bits));
  auto zero = [](int v) { return v == 0; };
  return std::all_of(r.coverage.begin(), r.coverage.end(), zero) &&
         std::all_of(r.flow.begin(), r.flow.end(), zero);
}

int objective_value(const Model& m, std::span<const int> var_ids,
                    std::span<const std::uint8_t> bits) {
  auto value = full_assignment(m, var_ids, bits);
  int count = 0;
  for (int k : m.vars.out_of(0)) count += value[k];
  return count;
}

std::string node_label(int node, int sink) {
  return node == sink ? std::string("N") : std::to_string(node);
}

void write_variable_map(std::ostream& out, const Model& m) {
  const int sink = m.sub.sink();
  out << "index,i,s,j,t,status,rule\n";
  auto row = [&](const std::string& index, const Variable& v) {
    out << index << ',' << node_label(v.arc.i, sink) << ',' << format_double(v.arc.s) << ','
        << node_label(v.arc.j, sink) << ',' << format_double(v.arc.t) << ','
        << status_name(v.status) << ',' << rule_name(v.rule) << '\n';
  };
  for (int k = 0; k < m.vars.size(); ++k) row(std::to_string(k), m.vars[k]);
  // Excluded candidates carry no index; they never enter the QUBO.
  for (const auto& v : m.vars.audit) row("", v);
}

}  // namespace fsvrptw
