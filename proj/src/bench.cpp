#include "fsvrptw/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "fsvrptw/errors.hpp"
#include "fsvrptw/format.hpp"
#include "fsvrptw/oracle.hpp"

namespace fsvrptw {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::greedy_sa: return "greedy+sa";
    case Method::greedy_exact: return "greedy+exact";
    case Method::filtering_sa: return "filtering+sa";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::greedy_sa, Method::greedy_exact, Method::filtering_sa}) {
    if (method_name(m) == s) return m;
  }
  throw ArgumentError("unknown method '" + std::string(s) +
                      "' (expected greedy+sa, greedy+exact or filtering+sa)");
}

BenchConfig bench_config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known{
      "instance", "ns", "seeds", "methods", "theta", "mode", "reads", "sweeps", "penalties",
      "exact_threshold", "exact_limit", "use_oracle", "oracle_cache", "workers", "record_timing"};
  if (!j.is_object()) throw ArgumentError("bench config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ArgumentError("unknown bench config key '" + k + "'");
    }
  }
  BenchConfig c;
  try {
    if (j.contains("instance")) c.instance = j["instance"].get<std::string>();
    if (j.contains("ns")) c.ns = j["ns"].get<std::vector<int>>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("theta")) c.theta = j["theta"].get<double>();
    if (j.contains("mode")) {
      const auto m = j["mode"].get<std::string>();
      if (m == "fraction") c.mode = SelectMode::fraction;
      else if (m == "threshold") c.mode = SelectMode::threshold;
      else throw ArgumentError("mode must be fraction or threshold");
    }
    if (j.contains("reads")) c.reads = j["reads"].get<int>();
    if (j.contains("sweeps")) c.sweeps = j["sweeps"].get<int>();
    if (j.contains("penalties") && !j["penalties"].is_null()) {
      c.penalties = Penalties{j["penalties"].at("coverage").get<double>(),
                              j["penalties"].at("flow").get<double>()};
    }
    if (j.contains("exact_threshold")) c.exact_threshold = j["exact_threshold"].get<int>();
    if (j.contains("exact_limit")) c.exact_limit = j["exact_limit"].get<int>();
    if (j.contains("use_oracle")) c.use_oracle = j["use_oracle"].get<bool>();
    if (j.contains("oracle_cache")) c.oracle_cache = j["oracle_cache"].get<std::string>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("record_timing")) c.record_timing = j["record_timing"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad bench config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const BenchConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  nlohmann::json pen;  // null means the size-based default
  if (c.penalties) pen = {{"coverage", c.penalties->coverage}, {"flow", c.penalties->flow}};
  return {{"instance", c.instance},
          {"ns", c.ns},
          {"seeds", c.seeds},
          {"methods", methods},
          {"theta", c.theta},
          {"mode", c.mode == SelectMode::fraction ? "fraction" : "threshold"},
          {"reads", c.reads},
          {"sweeps", c.sweeps},
          {"penalties", pen},
          {"exact_threshold", c.exact_threshold},
          {"exact_limit", c.exact_limit},
          {"use_oracle", c.use_oracle},
          {"oracle_cache", c.oracle_cache},
          {"record_timing", c.record_timing}};
}

void validate(const BenchConfig& c) {
  if (c.instance.empty()) throw ArgumentError("bench config needs an instance path");
  if (c.ns.empty() || c.seeds.empty() || c.methods.empty()) {
    throw ArgumentError("ns, seeds and methods must be non-empty");
  }
  for (int n : c.ns) {
    if (n < 1) throw ArgumentError("N must be positive");
  }
  if (!(c.theta > 0.0 && c.theta < 1.0)) throw ArgumentError("theta must lie in (0, 1)");
  if (c.reads < 1 || c.sweeps < 1) throw ArgumentError("reads and sweeps must be positive");
  if (c.penalties && (!(c.penalties->coverage > 0.0) || !(c.penalties->flow > 0.0))) {
    throw ArgumentError("penalties must be positive");
  }
  if (c.exact_limit < 1 || c.exact_threshold < 0) throw ArgumentError("bad exact limits");
  if (c.workers < 0) throw ArgumentError("workers must be >= 0");
}

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

BenchRow run_method(const BenchConfig& c, const Model& model, Method method, std::uint64_t seed) {
  BenchRow row;
  row.method = method;
  const auto t0 = clock_type::now();
  try {
    if (method == Method::filtering_sa) {
      SaSampler sa;
      const FilteringResult fr = filtering_baseline(model, sa, SampleRequest{c.reads, c.sweeps, seed});
      row.iterations = 1;
      if (fr.solution) {
        row.objective = fr.solution->objective;
        row.feasible = true;
      } else {
        row.note = "no feasible sample";
      }
    } else {
      GreedyConfig g;
      g.reads = c.reads;
      g.sweeps = c.sweeps;
      g.exact_threshold = c.exact_threshold;
      g.seed = seed;
      g.record_timing = c.record_timing;
      Solution sol;
      if (method == Method::greedy_sa) {
        g.theta = c.theta;
        g.mode = c.mode;
        SaSampler sa;
        sol = run_greedy(model, sa, g);
      } else {
        // Exact samples are 0/1, so a 0.5 threshold keeps exactly the chosen arcs.
        g.theta = 0.5;
        g.mode = SelectMode::threshold;
        ExactSampler ex(ExactOptions{c.exact_limit, std::nullopt});
        sol = run_greedy(model, ex, g);
      }
      row.iterations = sol.iterations;
      row.objective = sol.objective;
      row.feasible = sol.feasible;
      if (!sol.feasible) row.note = "invalid routes";
    }
  } catch (const StallError& e) {
    row.iterations = static_cast<int>(e.trace().size());
    row.note = std::string("stall: ") + e.what();
  }
  if (c.record_timing) row.wall_ms = elapsed_ms(t0);
  return row;
}

std::vector<BenchRow> run_job(const BenchConfig& c, const Instance& inst, int n, std::uint64_t seed,
                              std::ostream* log, std::mutex& log_mu) {
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard lock(log_mu);
    *log << inst.name << " N=" << n << " seed=" << seed << ": " << msg << '\n';
  };
  std::vector<BenchRow> rows;
  auto stamp = [&](BenchRow& r) {
    r.instance = inst.name;
    r.n = n;
    r.seed = seed;
  };

  const SubInstance sub = sample_customers(inst, n, seed);
  std::optional<Model> model;
  std::string infeasible;
  try {
    model = build_model(sub, build_time_grid(sub), c.penalties);
  } catch (const InfeasibleError& e) {
    infeasible = e.what();
  } catch (const DiscretizationError& e) {
    infeasible = e.what();
  }
  if (!model) {
    say("sub-instance infeasible, excluded: " + infeasible);
    for (Method m : c.methods) {
      BenchRow r;
      stamp(r);
      r.method = m;
      r.excluded = true;
      r.note = "infeasible instance: " + infeasible;
      rows.push_back(std::move(r));
    }
    return rows;
  }

  std::optional<int> optimum;
  if (c.use_oracle) {
    std::optional<OracleCache> cache;
    std::string key;
    if (!c.oracle_cache.empty()) {
      cache.emplace(c.oracle_cache);
      key = OracleCache::key(sub, model->grid);
      if (auto hit = cache->get(key)) optimum = hit->optimum;
    }
    if (!optimum) {
      const OracleResult res = oracle_optimum(*model, OracleOptions{c.exact_limit, 22});
      optimum = res.optimum;
      if (cache) cache->put(key, res);
    }
  }

  for (Method m : c.methods) {
    BenchRow r = run_method(c, *model, m, seed);
    stamp(r);
    say(std::string(method_name(m)) + " objective " +
        (r.objective ? std::to_string(*r.objective) : std::string("-")) +
        (r.note.empty() ? "" : " (" + r.note + ")"));
    rows.push_back(std::move(r));
  }
  if (!c.use_oracle) {
    for (const BenchRow& r : rows) {
      if (r.feasible && (!optimum || *r.objective < *optimum)) optimum = r.objective;
    }
  }
  for (BenchRow& r : rows) {
    r.optimum = optimum;
    if (r.feasible && optimum && *optimum > 0) {
      r.relative_gap = static_cast<double>(*r.objective - *optimum) / *optimum;
    }
  }
  return rows;
}

}  // namespace

std::vector<BenchRow> run_battery(const BenchConfig& config, std::ostream* log) {
  validate(config);
  const Instance inst = load_solomon(config.instance);
  std::vector<std::pair<int, std::uint64_t>> jobs;
  for (int n : config.ns) {
    if (n > static_cast<int>(inst.customers.size())) {
      throw ArgumentError("N=" + std::to_string(n) + " exceeds the customers in " + config.instance);
    }
    for (std::uint64_t s : config.seeds) jobs.emplace_back(n, s);
  }

  std::vector<std::vector<BenchRow>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < jobs.size();) {
      try {
        results[k] = run_job(config, inst, jobs[k].first, jobs[k].second, log, log_mu);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  unsigned nw = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                    : static_cast<unsigned>(config.workers);
  nw = std::min<unsigned>(nw, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<BenchRow> rows;
  for (auto& r : results) {
    for (auto& row : r) rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.n, a.seed, a.method) < std::tie(b.n, b.seed, b.method);
  });
  return rows;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

std::vector<SummaryCell> aggregate(std::span<const BenchRow> rows) {
  std::map<std::pair<int, Method>, std::vector<const BenchRow*>> groups;
  for (const BenchRow& r : rows) {
    if (!r.excluded) groups[{r.n, r.method}].push_back(&r);
  }
  std::vector<SummaryCell> cells;
  for (const auto& [key, members] : groups) {
    SummaryCell c;
    c.n = key.first;
    c.method = key.second;
    c.rows = static_cast<int>(members.size());
    std::vector<double> gaps, times;
    for (const BenchRow* r : members) {
      if (!r->feasible) continue;
      ++c.feasible;
      if (r->relative_gap) gaps.push_back(*r->relative_gap);
      times.push_back(r->wall_ms / 1000.0);
    }
    if (!gaps.empty()) std::tie(c.gap_mean, c.gap_std) = mean_std(gaps);
    if (!times.empty()) std::tie(c.time_mean, c.time_std) = mean_std(times);
    cells.push_back(c);
  }
  for (SummaryCell& c : cells) {
    if (c.method == Method::greedy_sa || !c.time_mean || *c.time_mean <= 0.0) continue;
    for (const SummaryCell& g : cells) {
      if (g.n == c.n && g.method == Method::greedy_sa && g.time_mean) {
        c.rel_time = (*c.time_mean - *g.time_mean) / *c.time_mean;
      }
    }
  }
  return cells;
}

namespace {

constexpr std::string_view kAbsent = "NA";

std::string opt_num(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kAbsent);
}

std::optional<double> parse_opt(const std::string& s, int line) {
  if (s == kAbsent) return std::nullopt;
  return parse_double(s, line);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kSummaryHeader =
    "N,method,rows,feasible,feasible_pct,gap_mean,gap_std,time_mean_s,time_std_s,rel_time_diff";

}  // namespace

void write_rows_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "instance,N,seed,method,objective,optimum,relative_gap,feasible,wall_ms,iterations\n";
  for (const BenchRow& r : rows) {
    out << r.instance << ',' << r.n << ',' << r.seed << ',' << method_name(r.method) << ','
        << (r.objective ? std::to_string(*r.objective) : "") << ','
        << (r.optimum ? std::to_string(*r.optimum) : "") << ','
        << (r.relative_gap ? format_double(*r.relative_gap) : "") << ','
        << (r.feasible ? "true" : "false") << ',' << format_ms(r.wall_ms) << ',' << r.iterations
        << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryCell> cells) {
  out << kSummaryHeader << '\n';
  for (const SummaryCell& c : cells) {
    out << c.n << ',' << method_name(c.method) << ',' << c.rows << ',' << c.feasible << ','
        << format_double(c.feasible_pct()) << ',' << opt_num(c.gap_mean) << ','
        << opt_num(c.gap_std) << ',' << opt_num(c.time_mean) << ',' << opt_num(c.time_std) << ','
        << opt_num(c.rel_time) << '\n';
  }
}

std::vector<SummaryCell> read_summary_csv(std::istream& in) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || line != kSummaryHeader) throw ParseError(1, "bad summary header");
  std::vector<SummaryCell> cells;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw ParseError(lineno, "expected 10 fields");
    SummaryCell c;
    try {
      c.n = std::stoi(f[0]);
      c.method = parse_method(f[1]);
      c.rows = std::stoi(f[2]);
      c.feasible = std::stoi(f[3]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad summary row");
    }
    c.gap_mean = parse_opt(f[5], lineno);
    c.gap_std = parse_opt(f[6], lineno);
    c.time_mean = parse_opt(f[7], lineno);
    c.time_std = parse_opt(f[8], lineno);
    c.rel_time = parse_opt(f[9], lineno);
    cells.push_back(c);
  }
  return cells;
}

void write_report_md(std::ostream& out, const BenchConfig& config, std::span<const SummaryCell> cells,
                     std::string_view version) {
  auto fixed = [](const std::optional<double>& v, int digits) -> std::string {
    if (!v) return "n/a";
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << *v;
    return s.str();
  };
  out << "# Benchmark report\n\n";
  out << "Instance `" << config.instance << "`, version `" << version << "`.\n\n";
  out << "Gaps are (C_A - C_opt) / C_opt against "
      << (config.use_oracle ? "the exact optimum" : "the best objective found by any method")
      << ". Gap and time statistics cover feasible runs only; n/a marks a cell without any.\n\n";

  std::vector<Method> methods;
  for (const SummaryCell& c : cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  }
  std::sort(methods.begin(), methods.end());
  std::vector<int> ns;
  for (const SummaryCell& c : cells) {
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
  }
  std::sort(ns.begin(), ns.end());
  auto find = [&](int n, Method m) -> const SummaryCell* {
    for (const SummaryCell& c : cells) {
      if (c.n == n && c.method == m) return &c;
    }
    return nullptr;
  };
  auto table = [&](const std::string& title, auto cell_text) {
    out << "## " << title << "\n\n| N |";
    for (Method m : methods) out << ' ' << method_name(m) << " |";
    out << "\n|---|";
    for (std::size_t k = 0; k < methods.size(); ++k) out << "---|";
    out << '\n';
    for (int n : ns) {
      out << "| " << n << " |";
      for (Method m : methods) {
        const SummaryCell* c = find(n, m);
        out << ' ' << (c ? cell_text(*c) : std::string("n/a")) << " |";
      }
      out << '\n';
    }
    out << '\n';
  };
  table("Relative optimality gap (mean ± std)", [&](const SummaryCell& c) {
    return c.gap_mean ? fixed(c.gap_mean, 3) + " ± " + fixed(c.gap_std, 3) : std::string("n/a");
  });
  table("Feasible runs (%)", [&](const SummaryCell& c) { return fixed(c.feasible_pct(), 0); });
  table("Wall time in seconds (mean ± std)", [&](const SummaryCell& c) {
    return c.time_mean ? fixed(c.time_mean, 3) + " ± " + fixed(c.time_std, 3) : std::string("n/a");
  });
  table("Relative time difference (t_A - t_greedy) / t_A", [&](const SummaryCell& c) {
    return c.method == Method::greedy_sa ? std::string("-") : fixed(c.rel_time, 3);
  });
  out << "## Configuration\n\n```json\n" << to_json(config).dump(2) << "\n```\n";
}

}  // namespace fsvrptw
