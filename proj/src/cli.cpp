#include "fsvrptw/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsvrptw/bench.hpp"
#include "fsvrptw/errors.hpp"
#include "fsvrptw/greedy.hpp"
#include "fsvrptw/model.hpp"
#include "fsvrptw/samplers.hpp"

namespace fsvrptw {

namespace {

namespace fs = std::filesystem;

struct InstanceArgs {
  std::string path;
  int n = 5;
  std::uint64_t seed = 0;
  std::optional<double> p_cov, p_flow;
};

struct SolveArgs {
  std::string sampler = "sa";
  std::optional<double> theta;
  bool threshold = false;
  std::string strategy = "multiple";
  int reads = 1000;
  int sweeps = 1000;
  int max_iterations = 1000;
  int patience = 10;
  int exact_threshold = 40;
  int workers = 1;
};

struct BenchArgs {
  std::string config;
  std::string instance;
  std::string ns, seeds, methods;
  std::optional<double> theta;
  std::optional<int> reads, sweeps, workers;
  bool no_oracle = false;
  std::string oracle_cache;
};

struct Common {
  std::string out;
  int verbose = 0;
  bool no_timing = false;
};

std::string out_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("FSVRPTW_OUT"); env && *env) return env;
  return "out";
}

bool is_fixture(const std::string& path) { return fs::path(path).extension() == ".json"; }

std::optional<Penalties> penalty_override(const InstanceArgs& a, int num_customers) {
  if (!a.p_cov && !a.p_flow) return std::nullopt;
  const Penalties d = default_penalties(num_customers);
  return Penalties{a.p_cov.value_or(d.coverage), a.p_flow.value_or(d.flow)};
}

Model load_model(const InstanceArgs& a) {
  if (!fs::exists(a.path)) throw ArgumentError("instance file not found: " + a.path);
  if (is_fixture(a.path)) {
    const Fixture f = load_fixture(a.path);
    return build_model(f, penalty_override(a, f.sub.num_customers()));
  }
  const Instance inst = load_solomon(a.path);
  if (a.n < 1 || a.n > static_cast<int>(inst.customers.size())) {
    throw ArgumentError("--n must lie in [1, " + std::to_string(inst.customers.size()) + "]");
  }
  const SubInstance sub = sample_customers(inst, a.n, a.seed);
  return build_model(sub, build_time_grid(sub), penalty_override(a, a.n));
}

nlohmann::json instance_json(const InstanceArgs& a, const Model& m) {
  nlohmann::json j{{"path", a.path}, {"seed", a.seed}, {"name", m.sub.name},
                   {"customers", m.sub.num_customers()},
                   {"penalties", {{"coverage", m.penalties.coverage}, {"flow", m.penalties.flow}}}};
  if (!is_fixture(a.path)) j["n"] = a.n;
  return j;
}

std::vector<std::uint64_t> parse_list(const std::string& s, const char* what) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  try {
    while (pos <= s.size()) {
      const std::size_t comma = std::min(s.find(',', pos), s.size());
      const std::string item = s.substr(pos, comma - pos);
      const std::size_t dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dots));
        const auto hi = std::stoull(item.substr(dots + 2));
        if (hi < lo) throw ArgumentError("");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      }
      pos = comma + 1;
    }
  } catch (const std::exception&) {
    throw ArgumentError(std::string("bad ") + what + " list '" + s + "' (use 5..10 or 1,2,3)");
  }
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ArgumentError("cannot write " + p.string());
  f << text;
}

int cmd_solve(const InstanceArgs& ia, const SolveArgs& sa, const Common& co, std::ostream& out,
              std::ostream& err) {
  GreedyConfig g;
  const bool exact = sa.sampler == "exact";
  // Exact samples are 0/1: threshold selection keeps exactly the chosen arcs.
  g.mode = sa.threshold || exact ? SelectMode::threshold : SelectMode::fraction;
  g.theta = sa.theta.value_or(exact ? 0.5 : g.theta);
  g.strategy = sa.strategy == "single" ? PathStrategy::single : PathStrategy::multiple;
  g.reads = sa.reads;
  g.sweeps = sa.sweeps;
  g.max_iterations = sa.max_iterations;
  g.patience = sa.patience;
  g.exact_threshold = sa.exact_threshold;
  g.seed = ia.seed;
  g.record_timing = !co.no_timing;
  validate(g);
  if (sa.workers < 0) throw ArgumentError("--workers must be >= 0");

  const Model m = load_model(ia);
  std::unique_ptr<Sampler> sampler;
  if (exact) sampler = std::make_unique<ExactSampler>(ExactOptions{400, std::nullopt});
  else sampler = std::make_unique<SaSampler>(sa.workers);

  nlohmann::json config{{"command", "solve"},
                        {"sampler", sa.sampler},
                        {"instance", instance_json(ia, m)},
                        {"greedy", to_json(g)},
                        {"record_timing", g.record_timing}};
  const fs::path dir = out_dir(co);
  fs::create_directories(dir);

  Solution sol;
  try {
    sol = run_greedy(m, *sampler, g);
  } catch (const StallError& e) {
    std::ostringstream trace;
    write_trace_jsonl(trace, e.trace());
    write_file(dir / "trace.jsonl", trace.str());
    err << "stall: " << e.what() << '\n';
    return 2;
  }
  std::ostringstream trace;
  write_trace_jsonl(trace, sol.trace);
  write_file(dir / "trace.jsonl", trace.str());

  const FeasibilityReport rep = validate_solution(sol.routes, sol.objective, m.sub, &m.grid);
  nlohmann::json routes = nlohmann::json::array();
  for (const Path& p : sol.routes) routes.push_back(route_json(p, m.sub.sink()));
  nlohmann::json j{{"routes", routes},
                   {"objective", sol.objective},
                   {"feasible", rep.feasible},
                   {"seed", sol.seed},
                   {"iterations", sol.iterations},
                   {"used_fallback", sol.used_fallback},
                   {"violations", rep.violations},
                   {"config", config},
                   {"version", FSVRPTW_VERSION}};
  write_file(dir / "solution.json", j.dump(2) + "\n");

  if (co.verbose > 0) {
    for (const auto& r : sol.trace) err << trace_record_json(r).dump() << '\n';
  }
  out << "objective " << sol.objective << " with " << sol.routes.size() << " routes in "
      << sol.iterations << " iterations" << (rep.feasible ? "" : " (INFEASIBLE)") << '\n';
  for (const auto& v : rep.violations) err << "violation: " << v << '\n';
  return rep.feasible ? 0 : 1;
}

int cmd_export(const InstanceArgs& ia, const Common& co, std::ostream& out) {
  const Model m = load_model(ia);
  if (m.vars.active_count() == 0) {
    throw InfeasibleError("active set", "no active variables remain after pre-processing");
  }
  const Subproblem sp = compile_qubo(m);
  const fs::path dir = out_dir(co);
  fs::create_directories(dir);
  std::ostringstream q, map;
  write_qubo(q, sp.qubo);
  write_variable_map(map, m);
  write_file(dir / "qubo.txt", q.str());
  write_file(dir / "variables.csv", map.str());
  nlohmann::json meta{{"config", {{"command", "export-qubo"}, {"instance", instance_json(ia, m)}}},
                      {"version", FSVRPTW_VERSION},
                      {"variables", sp.qubo.n},
                      {"offset", sp.qubo.offset}};
  write_file(dir / "export.json", meta.dump(2) + "\n");
  out << "wrote " << sp.qubo.n << " variables to " << (dir / "qubo.txt").string() << '\n';
  return 0;
}

int cmd_bench(const BenchArgs& ba, const Common& co, std::ostream& out, std::ostream& err) {
  BenchConfig c;
  if (!ba.config.empty()) {
    std::ifstream f(ba.config);
    if (!f) throw ArgumentError("config file not found: " + ba.config);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("config " + ba.config + " is not valid JSON: " + e.what());
    }
    c = bench_config_from_json(j);
  }
  if (!ba.instance.empty()) c.instance = ba.instance;
  if (!ba.ns.empty()) {
    c.ns.clear();
    for (auto v : parse_list(ba.ns, "N")) c.ns.push_back(static_cast<int>(v));
  }
  if (!ba.seeds.empty()) c.seeds = parse_list(ba.seeds, "seed");
  if (!ba.methods.empty()) {
    c.methods.clear();
    std::size_t pos = 0;
    while (pos <= ba.methods.size()) {
      const std::size_t comma = std::min(ba.methods.find(',', pos), ba.methods.size());
      c.methods.push_back(parse_method(ba.methods.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  if (ba.theta) c.theta = *ba.theta;
  if (ba.reads) c.reads = *ba.reads;
  if (ba.sweeps) c.sweeps = *ba.sweeps;
  if (ba.workers) c.workers = *ba.workers;
  if (ba.no_oracle) c.use_oracle = false;
  if (!ba.oracle_cache.empty()) c.oracle_cache = ba.oracle_cache;
  if (co.no_timing) c.record_timing = false;
  validate(c);

  std::vector<BenchRow> rows;
  try {
    rows = run_battery(c, co.verbose > 0 ? &err : nullptr);
  } catch (const LimitExceededError& e) {
    err << "error: the exact oracle cannot handle this size (" << e.what()
        << "); rerun with --no-oracle or raise exact_limit in the config\n";
    return 1;
  }
  const auto cells = aggregate(rows);
  const fs::path dir = out_dir(co);
  fs::create_directories(dir);
  std::ostringstream r, s, md;
  write_rows_csv(r, rows);
  write_summary_csv(s, cells);
  write_report_md(md, c, cells, FSVRPTW_VERSION);
  write_file(dir / "rows.csv", r.str());
  write_file(dir / "summary.csv", s.str());
  write_file(dir / "report.md", md.str());
  out << "wrote " << rows.size() << " rows to " << dir.string() << '\n';
  return 0;
}

void add_instance_options(CLI::App* cmd, InstanceArgs& a) {
  cmd->add_option("--instance", a.path, "Solomon instance file, or a .json fixture")->required();
  cmd->add_option("--n", a.n, "customers sampled from a Solomon file")->capture_default_str();
  cmd->add_option("--seed", a.seed, "sampling and solver seed")->capture_default_str();
  cmd->add_option("--p-cov", a.p_cov, "coverage penalty (default 2N+1)");
  cmd->add_option("--p-flow", a.p_flow, "flow penalty (default 2N+1)");
}

void add_common_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "output directory (default $FSVRPTW_OUT, then ./out)");
  cmd->add_flag("-v,--verbose", c.verbose, "progress on stderr");
  cmd->add_flag("--no-timing", c.no_timing, "write zero timings so outputs are byte-stable");
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fleet-sizing VRPTW solver with annealing-guided route generation"};
  app.set_version_flag("--version", std::string(FSVRPTW_VERSION));
  app.require_subcommand(1);

  InstanceArgs ia;
  SolveArgs sa;
  BenchArgs ba;
  Common co;

  auto* solve = app.add_subcommand("solve", "run the greedy route generator on one instance");
  add_instance_options(solve, ia);
  add_common_options(solve, co);
  solve->add_option("--sampler", sa.sampler, "sa or exact")
      ->check(CLI::IsMember({"sa", "exact"}))
      ->capture_default_str();
  solve->add_option("--theta", sa.theta, "selection parameter in (0,1) (default 0.9; 0.5 for exact)");
  solve->add_flag("--threshold", sa.threshold, "select by expectation >= theta instead of a fraction");
  solve->add_option("--strategy", sa.strategy, "multiple or single path extraction")
      ->check(CLI::IsMember({"multiple", "single"}))
      ->capture_default_str();
  solve->add_option("--reads", sa.reads, "samples per sampler call (M)")->capture_default_str();
  solve->add_option("--sweeps", sa.sweeps, "annealing sweeps per read")->capture_default_str();
  solve->add_option("--max-iterations", sa.max_iterations)->capture_default_str();
  solve->add_option("--patience", sa.patience, "idle iterations before the fallback")->capture_default_str();
  solve->add_option("--exact-threshold", sa.exact_threshold, "largest subproblem for the exact fallback")
      ->capture_default_str();
  solve->add_option("--workers", sa.workers, "annealing threads (0 = all cores)")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "run a seeded benchmark battery");
  add_common_options(bench, co);
  bench->add_option("--config", ba.config, "JSON battery config");
  bench->add_option("--instance", ba.instance, "Solomon instance file");
  bench->add_option("--ns", ba.ns, "customer counts, e.g. 5..10");
  bench->add_option("--seeds", ba.seeds, "seeds, e.g. 0..9");
  bench->add_option("--methods", ba.methods, "comma list of greedy+sa, greedy+exact, filtering+sa");
  bench->add_option("--theta", ba.theta);
  bench->add_option("--reads", ba.reads);
  bench->add_option("--sweeps", ba.sweeps);
  bench->add_option("--workers", ba.workers, "concurrent (N, seed) jobs");
  bench->add_flag("--no-oracle", ba.no_oracle, "measure gaps against the best objective found");
  bench->add_option("--oracle-cache", ba.oracle_cache, "directory for cached optima");

  auto* exp = app.add_subcommand("export-qubo", "write the initial QUBO and its variable map");
  add_instance_options(exp, ia);
  add_common_options(exp, co);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Error& e) {
    // Help and version requests exit 0; every parse failure maps to 1.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*solve) return cmd_solve(ia, sa, co, out, err);
    if (*bench) return cmd_bench(ba, co, out, err);
    return cmd_export(ia, co, out);
  } catch (const StallError& e) {
    err << "stall: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fsvrptw
