#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsvrptw/instance.hpp"
#include "fsvrptw/qubo.hpp"

namespace fsvrptw {

enum class VarStatus : std::uint8_t { active, fixed0, fixed1 };

// Pre-processing rules that exclude a candidate arc from the model.
enum class PreRule : std::uint8_t {
  none,
  enters_origin,        // x_{i,s,0,t}
  leaves_sink,          // x_{N,s,j,t}
  origin_late,          // x_{0,s,j,t}, s != 0
  late_service,         // b_ij > l_j
  early_departure,      // t < b_ij + q_j
  self_loop,            // x_{i,s,i,t}
  customer_at_zero,     // x_{i,0,j,t}, i != 0
  arrive_at_zero,       // x_{i,s,j,0}
  origin_to_sink,       // x_{0,s,N,t}
  off_grid,             // s or t not a departure point of its node
  no_advance,           // t <= s (zero travel and zero service)
};

std::string_view rule_name(PreRule r);
std::string_view status_name(VarStatus s);

struct Variable {
  ArcKey arc;
  VarStatus status = VarStatus::active;
  PreRule rule = PreRule::none;  // set for audit entries only
};

struct Penalties {
  double coverage = 1.0;
  double flow = 1.0;
};

// P = 2 * |W| + 1: any violated equality costs more than the whole fleet.
Penalties default_penalties(int num_customers);

// b_ij: earliest service start at j after leaving i at time s.
double earliest_service_start(int i, double s, int j, const SubInstance& sub);

// First pre-processing predicate that excludes the candidate, or none.
PreRule exclusion_rule(const ArcKey& arc, const SubInstance& sub, const TimeGrid& grid);

class VariableSet {
 public:
  VariableSet() = default;
  VariableSet(int num_nodes, std::vector<Variable> vars);

  int size() const { return static_cast<int>(vars_.size()); }
  const Variable& operator[](int id) const { return vars_[id]; }
  Variable& operator[](int id) { return vars_[id]; }
  const std::vector<Variable>& all() const { return vars_; }

  int active_count() const;
  std::vector<int> active_ids() const;
  std::optional<int> find(const ArcKey& arc) const;

  // Variables leaving / entering a node, over every status, in index order.
  const std::vector<int>& out_of(int node) const { return out_[node]; }
  const std::vector<int>& into(int node) const { return in_[node]; }

  // Excluded candidates with the rule that fired.
  std::vector<Variable> audit;

 private:
  std::vector<Variable> vars_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

struct EnumerateOptions {
  // Walk the full candidate product and record every exclusion. Costs
  // O(nodes^2 |T|^2) memory, so it is off for solver runs.
  bool keep_audit = false;
};

// X^0: every candidate over the grid's node tuples that survives the
// pre-processing predicates. Throws InfeasibleError naming a customer that
// has no incoming arc.
VariableSet enumerate_variables(const SubInstance& sub, const TimeGrid& grid,
                                const EnumerateOptions& options = {});

// X^0 from a hand-specified arc list. Only the structural rules are checked
// (t == s is tolerated); the arcs must reference grid points.
VariableSet variables_from_arcs(const SubInstance& sub, const TimeGrid& grid,
                                const std::vector<ArcKey>& arcs);

struct CoverageConstraint {
  int customer = 0;
  std::vector<int> vars;  // active members
  int offset = 0;         // members fixed to 1
  bool removed = false;
};

// (sum in + in_offset) - (sum out + out_offset) = 0 at tuple (node, time).
struct FlowConstraint {
  int node = 0;
  double time = 0.0;
  std::vector<int> in;
  std::vector<int> out;
  int in_offset = 0;
  int out_offset = 0;
  bool removed = false;
};

class ConstraintSet {
 public:
  std::vector<CoverageConstraint> coverage;  // coverage[j - 1] for customer j
  std::vector<FlowConstraint> flow;          // sorted by (node, time)
  int fixed_objective = 0;                   // depot arcs fixed to 1

  const CoverageConstraint& coverage_of(int customer) const { return coverage[customer - 1]; }
  CoverageConstraint& coverage_of(int customer) { return coverage[customer - 1]; }
  int flow_index(int node, double time) const;  // -1 when absent

  // Move a newly fixed variable out of every membership list.
  void on_fix(int var, const Variable& v, int value);

  std::string coverage_label(int customer) const;
  std::string flow_label(int index) const;
};

ConstraintSet build_constraints(const VariableSet& vars, const SubInstance& sub);

// Everything the greedy engine mutates, bundled.
struct Model {
  SubInstance sub;
  TimeGrid grid;
  VariableSet vars;
  ConstraintSet cons;
  Penalties penalties;

  // Returns false when the variable already holds `value`; throws
  // InvariantError on a conflicting re-fix.
  bool fix(int var, int value);
};

Model build_model(const SubInstance& sub, const TimeGrid& grid,
                  std::optional<Penalties> penalties = std::nullopt,
                  const EnumerateOptions& options = {});
Model build_model(const Fixture& fixture, std::optional<Penalties> penalties = std::nullopt);

// QUBO over the active variables (index order) and surviving constraints.
struct Subproblem {
  Qubo qubo;
  std::vector<int> var_ids;  // qubo index -> variable id
  Penalties penalties;
};

Subproblem compile_qubo(const ConstraintSet& cons, const VariableSet& vars, Penalties penalties);
inline Subproblem compile_qubo(const Model& m) { return compile_qubo(m.cons, m.vars, m.penalties); }

// Objective plus penalty-weighted squared residuals, recomputed from arc
// incidence and variable status rather than from the compiled terms or the
// constraint offsets. `bits` is indexed like `var_ids`.
double constraint_energy(const Model& m, std::span<const int> var_ids,
                         std::span<const std::uint8_t> bits);

// True when every surviving equality holds for the assignment.
bool satisfies_constraints(const Model& m, std::span<const int> var_ids,
                           std::span<const std::uint8_t> bits);

// Number of depot arcs set to one, including those already fixed.
int objective_value(const Model& m, std::span<const int> var_ids,
                    std::span<const std::uint8_t> bits);

std::string node_label(int node, int sink);
void write_variable_map(std::ostream& out, const Model& m);

}  // namespace fsvrptw
