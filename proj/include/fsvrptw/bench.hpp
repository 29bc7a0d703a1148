#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsvrptw/greedy.hpp"
#include "fsvrptw/model.hpp"

namespace fsvrptw {

enum class Method { greedy_sa, greedy_exact, filtering_sa };

std::string_view method_name(Method m);  // greedy+sa, greedy+exact, filtering+sa
Method parse_method(std::string_view s);  // ArgumentError on unknown names

struct BenchConfig {
  std::string instance;  // Solomon file
  std::vector<int> ns{5, 6, 7, 8, 9, 10};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<Method> methods{Method::greedy_sa, Method::greedy_exact, Method::filtering_sa};
  double theta = 0.9;
  SelectMode mode = SelectMode::fraction;
  int reads = 1000;   // M
  int sweeps = 1000;  // annealing budget per sampler call
  std::optional<Penalties> penalties;
  int exact_threshold = 40;  // greedy fallback size
  int exact_limit = 400;     // exact backend and oracle size limit
  bool use_oracle = true;    // false: gaps against the best objective found
  std::string oracle_cache;  // directory; empty disables caching
  int workers = 1;           // (N, seed) jobs run concurrently
  bool record_timing = true;
};

// Missing keys keep their defaults; unknown keys are rejected.
BenchConfig bench_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BenchConfig& c);
void validate(const BenchConfig& c);

struct BenchRow {
  std::string instance;
  int n = 0;
  std::uint64_t seed = 0;
  Method method = Method::greedy_sa;
  std::optional<int> objective;
  std::optional<int> optimum;
  std::optional<double> relative_gap;  // set only for feasible rows
  bool feasible = false;
  double wall_ms = 0.0;
  int iterations = 0;
  bool excluded = false;  // the sub-instance itself is infeasible
  std::string note;
};

// Every (N, seed, method) combination, sorted by (N, seed, method).
// Throws LimitExceededError when the oracle cannot handle a requested N.
std::vector<BenchRow> run_battery(const BenchConfig& config, std::ostream* log = nullptr);

struct SummaryCell {
  int n = 0;
  Method method = Method::greedy_sa;
  int rows = 0;      // excluded rows are not counted
  int feasible = 0;
  std::optional<double> gap_mean, gap_std;    // over feasible rows
  std::optional<double> time_mean, time_std;  // seconds, over feasible rows
  std::optional<double> rel_time;             // (t_A - t_greedy) / t_A against greedy+sa

  double feasible_pct() const { return rows ? 100.0 * feasible / rows : 0.0; }
};

std::vector<SummaryCell> aggregate(std::span<const BenchRow> rows);

void write_rows_csv(std::ostream& out, std::span<const BenchRow> rows);
void write_summary_csv(std::ostream& out, std::span<const SummaryCell> cells);
std::vector<SummaryCell> read_summary_csv(std::istream& in);
void write_report_md(std::ostream& out, const BenchConfig& config, std::span<const SummaryCell> cells,
                     std::string_view version);

}  // namespace fsvrptw
