#include "fsvrptw/oracle.hpp"

#include <algorithm>
#include <climits>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fsvrptw/errors.hpp"
#include "fsvrptw/format.hpp"

namespace fsvrptw {

std::optional<int> exhaustive_optimum(const Model& m) {
  const std::vector<int> ids = m.vars.active_ids();
  const int n = static_cast<int>(ids.size());
  if (n > 30) throw LimitExceededError(n, 30);
  std::vector<int> local(m.vars.size(), -1);
  for (int k = 0; k < n; ++k) local[ids[k]] = k;

  // Residual of each surviving equality, rebuilt from arc incidence.
  std::vector<int> residual;
  std::vector<std::vector<std::pair<int, int>>> touches(n);
  auto fixed_one = [&](int v) { return m.vars[v].status == VarStatus::fixed1 ? 1 : 0; };
  for (const auto& c : m.cons.coverage) {
    if (c.removed) continue;
    const int id = static_cast<int>(residual.size());
    int r = -1;
    for (int v : m.vars.into(c.customer)) {
      r += fixed_one(v);
      if (local[v] >= 0) touches[local[v]].emplace_back(id, 1);
    }
    residual.push_back(r);
  }
  for (const auto& f : m.cons.flow) {
    if (f.removed) continue;
    const int id = static_cast<int>(residual.size());
    int r = 0;
    for (int v : m.vars.into(f.node)) {
      if (m.vars[v].arc.t != f.time) continue;
      r += fixed_one(v);
      if (local[v] >= 0) touches[local[v]].emplace_back(id, 1);
    }
    for (int v : m.vars.out_of(f.node)) {
      if (m.vars[v].arc.s != f.time) continue;
      r -= fixed_one(v);
      if (local[v] >= 0) touches[local[v]].emplace_back(id, -1);
    }
    residual.push_back(r);
  }
  int base = 0;
  std::vector<int> cost(n, 0);
  for (int v : m.vars.out_of(0)) {
    base += fixed_one(v);
    if (local[v] >= 0) cost[local[v]] = 1;
  }

  int bad = static_cast<int>(std::count_if(residual.begin(), residual.end(), [](int r) { return r != 0; }));
  int objective = base;
  int best = bad == 0 ? objective : INT_MAX;
  std::vector<std::uint8_t> x(n, 0);
  const std::uint64_t total = std::uint64_t{1} << n;
  // Gray-code walk: one flip per step.
  for (std::uint64_t step = 1; step < total; ++step) {
    const int k = __builtin_ctzll(step);
    const int dx = x[k] ? -1 : 1;
    x[k] ^= 1;
    objective += cost[k] * dx;
    for (const auto& [c, a] : touches[k]) {
      const bool was = residual[c] != 0;
      residual[c] += a * dx;
      bad += (residual[c] != 0) - was;
    }
    if (bad == 0) best = std::min(best, objective);
  }
  if (best == INT_MAX) return std::nullopt;
  return best;
}

OracleResult oracle_optimum(const Model& m, const OracleOptions& options) {
  ExactResult r = exact_solve(m, ExactOptions{options.limit, std::nullopt});
  OracleResult out;
  out.optimum = r.objective;
  out.var_ids = std::move(r.var_ids);
  out.assignment = std::move(r.values);
  out.nodes = r.nodes;
  out.exhausted = r.exhausted;
  if (!satisfies_constraints(m, out.var_ids, out.assignment)) {
    throw InvariantError("exact solver returned an assignment that violates a constraint");
  }
  if (m.vars.active_count() <= options.exhaustive_limit) {
    out.exhaustive_optimum = exhaustive_optimum(m);
    if (out.exhaustive_optimum != out.optimum) {
      throw InvariantError("branch and bound and exhaustive enumeration disagree");
    }
  }
  return out;
}

std::optional<std::vector<Path>> decode_routes(const Model& m, std::span<const int> var_ids,
                                               std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> on(m.vars.size(), 0);
  for (int k = 0; k < m.vars.size(); ++k) on[k] = m.vars[k].status == VarStatus::fixed1;
  for (std::size_t q = 0; q < var_ids.size(); ++q) on[var_ids[q]] = bits[q] ? 1 : 0;
  const int sink = m.sub.sink();
  int used = 0;
  std::vector<Path> routes;
  for (int first : m.vars.out_of(0)) {
    if (!on[first]) continue;
    Path p;
    p.tuples.push_back({0, m.vars[first].arc.s});
    int arc = first;
    while (true) {
      const ArcKey& a = m.vars[arc].arc;
      p.arcs.push_back(arc);
      p.tuples.push_back({a.j, a.t});
      ++used;
      if (a.j == sink) break;
      if (static_cast<int>(p.arcs.size()) > m.sub.num_customers() + 1) return std::nullopt;
      int next = -1;
      for (int v : m.vars.out_of(a.j)) {
        if (!on[v] || m.vars[v].arc.s != a.t) continue;
        if (next >= 0) return std::nullopt;  // the route forks
        next = v;
      }
      if (next < 0) return std::nullopt;  // the route stops short of the sink
      arc = next;
    }
    routes.push_back(std::move(p));
  }
  const int total = static_cast<int>(std::count(on.begin(), on.end(), 1));
  if (used != total) return std::nullopt;  // stray arcs outside every route
  return routes;
}

FilteringResult filtering_baseline(const Model& m, Sampler& sampler, const SampleRequest& req) {
  const Subproblem sp = compile_qubo(m);
  const SampleSet ss = sampler.sample(m, sp, req);
  std::vector<int> order(ss.num_reads);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ss.energies[a] < ss.energies[b]; });
  FilteringResult res;
  for (int r : order) {
    const auto bits = ss.row(r);
    if (!satisfies_constraints(m, sp.var_ids, bits)) continue;
    auto routes = decode_routes(m, sp.var_ids, bits);
    if (!routes) continue;
    const int objective = static_cast<int>(routes->size());
    if (!validate_solution(*routes, objective, m.sub, &m.grid).feasible) continue;
    ++res.feasible_samples;
    if (res.solution) continue;
    Solution sol;
    sol.routes = std::move(*routes);
    sol.objective = objective;
    sol.feasible = true;
    sol.iterations = 1;
    sol.seed = req.seed;
    res.solution = std::move(sol);
    res.chosen_read = r;
    res.chosen_energy = ss.energies[r];
  }
  return res;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string OracleCache::key(const SubInstance& sub, const TimeGrid& grid) {
  nlohmann::json j;
  j["instance"] = to_json(sub);
  j["grid"] = grid.points;
  j["departures"] = grid.departures;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::optional<OracleResult> OracleCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    nlohmann::json j;
    in >> j;
    OracleResult r;
    r.optimum = j.at("optimum").get<int>();
    r.var_ids = j.at("var_ids").get<std::vector<int>>();
    for (char c : j.at("assignment").get<std::string>()) r.assignment.push_back(c == '1');
    r.nodes = j.at("nodes").get<std::int64_t>();
    r.exhausted = j.at("exhausted").get<bool>();
    if (!j.at("exhaustive_optimum").is_null()) r.exhaustive_optimum = j.at("exhaustive_optimum").get<int>();
    return r;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // unreadable entries are recomputed
  }
}

void OracleCache::put(const std::string& key, const OracleResult& r) const {
  std::filesystem::create_directories(dir_);
  nlohmann::json j;
  j["optimum"] = r.optimum;
  j["var_ids"] = r.var_ids;
  std::string bits;
  for (auto b : r.assignment) bits.push_back(b ? '1' : '0');
  j["assignment"] = bits;
  j["nodes"] = r.nodes;
  j["exhausted"] = r.exhausted;
  j["exhaustive_optimum"] = r.exhaustive_optimum ? nlohmann::json(*r.exhaustive_optimum) : nlohmann::json();
  const auto tmp = dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp);
    out << j.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, dir_ / (key + ".json"));
}

}  // namespace fsvrptw
