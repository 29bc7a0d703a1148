#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsvrptw/dagpath.hpp"
#include "fsvrptw/errors.hpp"
#include "fsvrptw/model.hpp"
#include "fsvrptw/samplers.hpp"

namespace fsvrptw {

enum class SelectMode { fraction, threshold };

// Variable ids picked from `var_ids` (aligned with `exps`), returned in id
// order. Fraction mode keeps ceil(theta * n) by descending expectation, ties
// to the smaller id; threshold mode keeps expectation >= theta.
std::vector<int> select_variables(std::span<const double> exps, std::span<const int> var_ids,
                                  double theta, SelectMode mode);

// Which part of a path a tuple sits on when it is pruned.
enum class TuplePosition { interior, start_depot, start_customer, end_depot, end_customer };
std::string_view position_name(TuplePosition p);

struct PruneEvent {
  int iteration = 0;
  int k = 0;
  Tuple tuple;
  int var = 0;
  int value = 0;
  TuplePosition position = TuplePosition::interior;
  std::string rule;  // along_path, 1a, 1b, 2a, 2b, fallback
};

struct PathState {
  std::vector<Path> paths;  // S
  std::vector<PruneEvent> log;
  int iteration = 0;
};

// Joins P onto the paths in S that end where P starts or start where P
// ends, removing the junction constraints; otherwise appends P.
void concat(PathState& state, Model& m, const Path& p);

// Concat, then apply the pruning rules tuple by tuple for every path in q.
// Returns the number of variables fixed.
int prune(PathState& state, Model& m, std::span<const Path> q);

// Every customer strictly inside a path of S has no active incident variable.
bool interior_customers_pruned(const Model& m, std::span<const Path> paths);

struct GreedyConfig {
  double theta = 0.9;
  SelectMode mode = SelectMode::fraction;
  PathStrategy strategy = PathStrategy::multiple;
  int reads = 1000;
  int sweeps = 1000;
  int max_iterations = 1000;
  int patience = 10;
  int exact_threshold = 40;
  bool exact_fallback = true;
  std::uint64_t seed = 0;
  bool record_timing = true;
};

void validate(const GreedyConfig& config);
nlohmann::json to_json(const GreedyConfig& config);

struct IterationRecord {
  int l = 0;
  int active_count = 0;
  int selected_count = 0;
  int paths_found = 0;
  double best_energy = 0.0;
  double wall_ms = 0.0;
  int pruned = 0;
  std::string source;  // sampler name, or "fallback"
};

struct Solution {
  std::vector<Path> routes;
  int objective = 0;
  bool feasible = false;
  int iterations = 0;
  bool used_fallback = false;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> trace;
  std::vector<PruneEvent> prune_log;
  std::vector<int> active_history;  // |X^l| before each iteration, then the final size
};

class StallError : public Error {
 public:
  StallError(const std::string& what, std::vector<IterationRecord> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

// Callback invoked after every prune step; used by property tests.
struct GreedyObserver {
  virtual ~GreedyObserver() = default;
  virtual void after_prune(const Model&, const PathState&, std::span<const Path>) {}
  virtual void after_dag(const Dag&, std::span<const Path>) {}
};

// Sample, select, extract paths and prune until no active variable is left.
// Throws StallError when no progress can be made.
Solution run_greedy(Model model, Sampler& sampler, const GreedyConfig& config,
                    GreedyObserver* observer = nullptr);

struct FeasibilityReport {
  bool feasible = true;
  int objective = 0;
  std::vector<std::string> violations;
};

// Checks depot anchoring, the customer partition, flow at every visited
// tuple, per-arc latest-start limits and continuous-time propagation. Never throws.
FeasibilityReport validate_solution(std::span<const Path> routes, int objective,
                                    const SubInstance& sub, const TimeGrid* grid = nullptr);

nlohmann::json route_json(const Path& p, int sink);
nlohmann::json trace_record_json(const IterationRecord& r);
void write_trace_jsonl(std::ostream& out, std::span<const IterationRecord> trace);

}  // namespace fsvrptw
