// Acceptance battery: one PASS/FAIL line per criterion.
//
//   fsvrptw_acceptance [--only 1,2,...] [--known-fail 6,...]
//
// Exit status is 0 when every failing criterion is listed in --known-fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fsvrptw/cli.hpp"
#include "fsvrptw/errors.hpp"
#include "fsvrptw/greedy.hpp"
#include "fsvrptw/oracle.hpp"
#include "support.hpp"

using namespace fsvrptw;
using namespace fsvrptw::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::set<std::vector<int>> route_nodes(const Solution& s) {
  std::set<std::vector<int>> out;
  for (const Path& p : s.routes) {
    std::vector<int> nodes;
    for (const Tuple& t : p.tuples) nodes.push_back(t.node);
    out.insert(nodes);
  }
  return out;
}

GreedyConfig exact_config() {
  GreedyConfig c;
  c.theta = 0.5;
  c.mode = SelectMode::threshold;
  c.record_timing = false;
  return c;
}

// Observer collecting the structural checks of criterion 7.
struct Structure : GreedyObserver {
  int customers = 0;
  long dags = 0, extractions = 0, prunes = 0;
  long cyclic = 0, overlapping = 0, interior_left = 0, growth = 0;
  int last_active = -1;

  void after_dag(const Dag& dag, std::span<const Path> q) override {
    ++dags;
    ++extractions;
    if (dag.topo.size() != dag.nodes.size()) ++cyclic;
    if (!customer_disjoint(q, customers)) ++overlapping;
  }
  void after_prune(const Model& m, const PathState& s, std::span<const Path>) override {
    ++prunes;
    if (!interior_customers_pruned(m, s.paths)) ++interior_left;
    const int a = m.vars.active_count();
    if (last_active >= 0 && a > last_active) ++growth;
    last_active = a;
  }
};

Structure g_structure;
long g_runs_checked = 0;

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const Model m = running_example();
  const std::set<std::vector<int>> want{{0, 1, 3}, {0, 2, 3}};
  int ok = 0;
  ExactSampler exact(ExactOptions{400, std::nullopt});
  const Solution e = run_greedy(m, exact, exact_config());
  ok += e.objective == 2 && route_nodes(e) == want && e.feasible;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SaSampler sa;
    GreedyConfig c;
    c.seed = seed;
    c.record_timing = false;
    const Solution s = run_greedy(m, sa, c);
    ok += s.objective == 2 && route_nodes(s) == want && s.feasible;
  }
  ScriptedSampler scripted = walkthrough_sampler(m);
  const Solution w = run_greedy(m, scripted, walkthrough_config());
  std::set<std::pair<int, int>> first;
  for (const auto& ev : w.prune_log) {
    if (ev.iteration == 0) first.insert({ev.var, ev.value});
  }
  const std::set<std::pair<int, int>> rows{
      {var_id(m, 1, 1, -1, 2), 1}, {var_id(m, 0, 0, 1, 2), 0}, {var_id(m, 0, 0, 1, 3), 0},
      {var_id(m, 1, 3, -1, 3), 0}, {var_id(m, 1, 2, -1, 3), 0}, {var_id(m, 0, 0, 2, 3), 1},
      {var_id(m, 2, 3, -1, 3), 1}, {var_id(m, 0, 0, 2, 2), 0}, {var_id(m, 2, 2, -1, 3), 0}};
  const bool table = first == rows && w.prune_log.size() == rows.size() + 1;
  return {ok == 11 && table, std::to_string(ok) + "/11 golden solves, prune rows " +
                                 (table ? "match" : "differ")};
}

Outcome criterion2() {
  int compared = 0, good = 0, skipped = 0;
  for (const char* file : {"R101.txt", "R201.txt"}) {
    for (int n = 2; n <= 7; ++n) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Model m;
        try {
          m = solomon_model(file, n, seed);
        } catch (const DiscretizationError&) {
          ++skipped;
          continue;
        } catch (const InfeasibleError&) {
          ++skipped;
          continue;
        }
        const int opt = oracle_optimum(m).optimum;
        ExactSampler exact(ExactOptions{400, std::nullopt});
        const Solution s = run_greedy(m, exact, exact_config());
        ++compared;
        good += s.iterations == 1 && s.feasible && s.objective == opt;
      }
    }
  }
  return {good == compared && compared > 0,
          std::to_string(good) + "/" + std::to_string(compared) + " one-iteration optimal" +
              (skipped ? ", " + std::to_string(skipped) + " infeasible sub-instances skipped" : "")};
}

// Criteria 3 and 5 share one battery of annealing runs.
struct SaBattery {
  int runs = 0, feasible = 0, violations = 0;
  std::map<std::pair<std::string, int>, std::pair<double, int>> gap;  // sum, count
  std::string failures;
};

const SaBattery& sa_battery() {
  static std::optional<SaBattery> cached;
  if (cached) return *cached;
  SaBattery b;
  for (const char* file : {"R101.txt", "R201.txt"}) {
    for (int n = 5; n <= 10; ++n) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Model m = solomon_model(file, n, seed);
        const int opt = oracle_optimum(m).optimum;
        g_structure.customers = n;
        g_structure.last_active = -1;
        SaSampler sa;
        GreedyConfig c;
        c.seed = seed;
        c.record_timing = false;
        ++b.runs;
        try {
          const Solution s = run_greedy(m, sa, c, &g_structure);
          ++g_runs_checked;
          const FeasibilityReport rep = validate_solution(s.routes, s.objective, m.sub, &m.grid);
          b.violations += static_cast<int>(rep.violations.size());
          if (rep.feasible) {
            ++b.feasible;
            auto& [sum, count] = b.gap[{file, n}];
            sum += static_cast<double>(s.objective - opt) / opt;
            ++count;
          } else {
            b.failures += " " + std::string(file) + "/N" + std::to_string(n) + "/s" + std::to_string(seed);
          }
        } catch (const StallError& e) {
          b.failures += " " + std::string(file) + "/N" + std::to_string(n) + "/s" +
                        std::to_string(seed) + "(stall)";
        }
      }
    }
  }
  cached = b;
  return *cached;
}

Outcome criterion3() {
  const SaBattery& b = sa_battery();
  return {b.feasible == b.runs && b.violations == 0,
          std::to_string(b.feasible) + "/" + std::to_string(b.runs) + " feasible, " +
              std::to_string(b.violations) + " violations" + b.failures};
}

Outcome criterion4() {
  std::vector<Model> models{running_example()};
  for (const char* file : {"R101.txt", "R201.txt"}) {
    for (int n = 1; n <= 4; ++n) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Model m = solomon_model(file, n, seed);
        if (m.vars.active_count() <= 18) models.push_back(std::move(m));
      }
    }
  }
  double worst = 0.0;
  long assignments = 0;
  for (const Model& m : models) {
    const Subproblem sp = compile_qubo(m);
    const IsingModel is = to_ising(sp.qubo);
    std::vector<std::uint8_t> x(sp.qubo.n);
    std::vector<std::int8_t> z(sp.qubo.n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << sp.qubo.n); ++mask) {
      for (int k = 0; k < sp.qubo.n; ++k) {
        x[k] = (mask >> k) & 1U;
        z[k] = x[k] ? 1 : -1;
      }
      const double e = sp.qubo.energy(x);
      worst = std::max(worst, std::abs(e - constraint_energy(m, sp.var_ids, x)));
      worst = std::max(worst, std::abs(e - is.energy(z)));
      ++assignments;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu models, %ld assignments, max deviation %.3g", models.size(),
                assignments, worst);
  return {worst <= 1e-9 && models.size() > 1, buf};
}

Outcome criterion5() {
  const SaBattery& b = sa_battery();
  bool ok = b.gap.size() == 12;
  std::ostringstream d;
  d.precision(3);
  for (const auto& [key, v] : b.gap) {
    const double mean = v.first / v.second;
    ok = ok && mean <= 0.15;
    d << (key.first == "R101.txt" ? "R101" : "R201") << "/N" << key.second << "=" << mean << " ";
  }
  return {ok, d.str()};
}

Outcome criterion6() {
  int greedy_ok = 0, filter_ok = 0, runs = 0;
  std::ostringstream d;
  for (const char* file : {"R101.txt", "R201.txt"}) {
    int gf = 0, ff = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Model m = solomon_model(file, 25, seed);
      SaSampler sa;
      GreedyConfig c;
      c.seed = seed;
      c.record_timing = false;
      ++runs;
      try {
        gf += run_greedy(m, sa, c).feasible;
      } catch (const StallError&) {
      }
      ff += filtering_baseline(m, sa, SampleRequest{c.reads, c.sweeps, seed}).solution.has_value();
    }
    d << (file[1] == '1' ? "R101" : "R201") << ": greedy " << gf << "/10, filtering " << ff << "/10; ";
    greedy_ok += gf;
    filter_ok += ff;
  }
  return {greedy_ok == runs && filter_ok < runs, d.str()};
}

// Longest path over all paths of a DAG by depth-first enumeration.
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

Outcome criterion7() {
  sa_battery();
  // Random corpus: one departure time per customer, so every path is customer-simple.
  std::mt19937_64 rng(7);
  int corpus = 0, dp_mismatch = 0, overlap = 0;
  while (corpus < 2000) {
    const int customers = 2 + static_cast<int>(rng() % 8);
    const int sink = customers + 1;
    std::vector<double> time(customers + 2, 0.0);
    for (int c = 1; c <= customers; ++c) time[c] = 1.0 + static_cast<double>(rng() % 6);
    std::vector<Variable> vars;
    std::set<ArcKey> seen;
    const int m = 1 + static_cast<int>(rng() % 16);
    for (int k = 0; k < m; ++k) {
      const int i = static_cast<int>(rng() % (customers + 1));
      const int j = 1 + static_cast<int>(rng() % (customers + 1));
      const double t = j == sink ? time[i] + 1.0 : time[j];
      if (i == j || t <= time[i]) continue;
      seen.insert({i, time[i], j, t});
    }
    if (seen.empty()) continue;
    for (const auto& a : seen) vars.push_back(Variable{a, VarStatus::active, PreRule::none});
    const VariableSet v(customers + 2, std::move(vars));
    std::vector<int> ids(v.size());
    for (int k = 0; k < v.size(); ++k) ids[k] = k;
    const Dag dag = build_dag(v, ids, sink);
    if (dag.nodes.size() > 12) continue;
    ++corpus;
    dp_mismatch += static_cast<int>(longest_path(dag).arcs.size()) != brute_longest(dag);
    overlap += !customer_disjoint(extract_disjoint_paths(dag), customers);
  }
  const Structure& s = g_structure;
  const bool ok = s.cyclic == 0 && s.overlapping == 0 && s.interior_left == 0 && s.growth == 0 &&
                  dp_mismatch == 0 && overlap == 0 && s.dags > 0;
  std::ostringstream d;
  d << s.dags << " DAGs over " << g_runs_checked << " runs (cyclic " << s.cyclic << ", overlapping "
    << s.overlapping << ", interior left " << s.interior_left << ", growth " << s.growth << "); "
    << corpus << " corpus DAGs (DP mismatch " << dp_mismatch << ", overlap " << overlap << ")";
  return {ok, d.str()};
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "fsvrptw");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion8() {
  const fs::path root = fs::temp_directory_path() / "fsvrptw_acceptance_det";
  fs::remove_all(root);
  int runs = 0, codes_ok = 0;
  const std::vector<std::pair<std::string, std::string>> tags{{"a", "1"}, {"b", "1"}, {"c", "4"}};
  for (const auto& [tag, workers] : tags) {
    const fs::path dir = root / tag;
    const std::vector<std::vector<std::string>> cmds{
        {"solve", "--instance", data_path("R101.txt"), "--n", "8", "--seed", "3", "--workers", workers,
         "--no-timing", "--out", (dir / "solve").string()},
        {"solve", "--instance", data_path("running_example.json"), "--sampler", "exact",
         "--no-timing", "--out", (dir / "exact").string()},
        {"bench", "--instance", data_path("R201.txt"), "--ns", "4..5", "--seeds", "0..2", "--reads",
         "200", "--sweeps", "200", "--workers", workers, "--no-timing", "--out", (dir / "bench").string()},
        {"export-qubo", "--instance", data_path("R101.txt"), "--n", "6", "--seed", "1", "--out",
         (dir / "export").string()}};
    for (const auto& c : cmds) {
      ++runs;
      codes_ok += run(c) == 0;
    }
  }
  int files = 0, same = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    ++files;
    const std::string a = slurp(entry.path());
    same += a == slurp(root / "b" / rel) && a == slurp(root / "c" / rel);
  }
  fs::remove_all(root);
  return {codes_ok == runs && files >= 9 && same == files,
          std::to_string(same) + "/" + std::to_string(files) +
              " files identical across reruns and worker counts 1 and 4"};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, known;
  for (int k = 1; k + 1 < argc; k += 2) {
    const std::string flag = argv[k];
    if (flag == "--only") only = parse_list(argv[k + 1]);
    else if (flag == "--known-fail") known = parse_list(argv[k + 1]);
  }
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
  int unexpected = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string tag;
    if (!o.pass && known.count(id)) tag = " [known failure]";
    if (o.pass && known.count(id)) tag = " [listed as known failure but passed]";
    if (!o.pass && !known.count(id)) ++unexpected;
    std::printf("criterion %d: %s  %s (%.1fs)%s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs, tag.c_str());
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
