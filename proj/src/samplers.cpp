#include "fsvrptw/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <climits>
#include <cmath>
#include <random>
#include <thread>

#include "fsvrptw/errors.hpp"
#include "fsvrptw/format.hpp"

namespace fsvrptw {

void write_sample_csv(std::ostream& out, const SampleSet& ss) {
  out << "read,energy,bits\n";
  for (int r = 0; r < ss.num_reads; ++r) {
    out << r << ',' << format_double(ss.energies[r]) << ',';
    for (std::uint8_t b : ss.row(r)) out << (b ? '1' : '0');
    out << '\n';
  }
}

std::vector<double> one_body_expectations(const SampleSet& ss, std::optional<simd::Isa> isa) {
  std::vector<std::uint32_t> counts(ss.num_vars, 0);
  simd::column_counts(isa.value_or(simd::detect_isa()), ss.bits.data(), ss.num_reads, ss.num_vars,
                      counts.data());
  std::vector<double> out(ss.num_vars);
  for (int k = 0; k < ss.num_vars; ++k) out[k] = static_cast<double>(counts[k]) / ss.num_reads;
  return out;
}

std::pair<double, double> default_beta_range(const Qubo& q) {
  std::vector<double> flip(q.n, 0.0);
  double smallest = INFINITY;
  for (int k = 0; k < q.n; ++k) {
    flip[k] = std::abs(q.linear[k]);
    if (q.linear[k] != 0.0) smallest = std::min(smallest, std::abs(q.linear[k]));
  }
  for (const auto& t : q.quadratic) {
    flip[t.a] += std::abs(t.coeff);
    flip[t.b] += std::abs(t.coeff);
    smallest = std::min(smallest, std::abs(t.coeff));
  }
  double largest = q.n ? *std::max_element(flip.begin(), flip.end()) : 0.0;
  if (largest == 0.0) largest = 1.0;
  if (!std::isfinite(smallest)) smallest = 1.0;
  const double hot = std::log(2.0) / largest;
  const double cold = std::log(100.0) / smallest;
  return {std::min(hot, cold), cold};
}

std::vector<double> beta_schedule(double hot, double cold, int sweeps) {
  std::vector<double> betas(sweeps);
  if (sweeps == 1) {
    betas[0] = cold;
    return betas;
  }
  const double ratio = cold / hot;
  for (int k = 0; k < sweeps; ++k) {
    betas[k] = hot * std::pow(ratio, static_cast<double>(k) / (sweeps - 1));
  }
  return betas;
}

namespace {

std::mt19937_64 read_rng(std::uint64_t seed, std::uint64_t read) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(read), static_cast<std::uint32_t>(read >> 32)};
  return std::mt19937_64(seq);
}

template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

SampleSet sa_sample(const Qubo& q, const SaParams& params) {
  if (q.n == 0) throw EmptyModelError();
  if (params.reads < 1) throw ArgumentError("reads must be at least 1");
  if (params.sweeps < 1) throw ArgumentError("sweeps must be at least 1");
  const auto [hot, cold] = params.beta_range.value_or(default_beta_range(q));
  if (!(hot > 0.0) || !(cold >= hot)) throw ArgumentError("beta range must satisfy 0 < hot <= cold");
  const std::vector<double> betas = beta_schedule(hot, cold, params.sweeps);
  const CouplingGraph g = coupling_graph(q);

  simd::AnnealProblem p;
  p.n = q.n;
  p.linear = q.linear.data();
  p.row_ptr = g.row_ptr.data();
  p.cols = g.cols.data();
  p.weights = g.weights.data();
  p.betas = betas;

  simd::Isa isa = params.isa.value_or(simd::detect_isa());
  if (!simd::isa_supported(isa)) isa = simd::Isa::scalar;

  SampleSet ss;
  ss.num_vars = q.n;
  ss.num_reads = params.reads;
  ss.bits.assign(static_cast<std::size_t>(params.reads) * q.n, 0);
  ss.energies.assign(params.reads, 0.0);
  ss.info = {"sa", params.reads, params.sweeps, params.seed};

  const int blocks = (params.reads + 3) / 4;
  parallel_for(blocks, params.workers, [&](int b) {
    const int first = b * 4;
    const int count = std::min(4, params.reads - first);
    std::mt19937_64 rngs[4];
    std::uint8_t* rows[4] = {};
    for (int lane = 0; lane < count; ++lane) {
      rngs[lane] = read_rng(params.seed, static_cast<std::uint64_t>(first + lane));
      rows[lane] = ss.bits.data() + static_cast<std::size_t>(first + lane) * q.n;
    }
    if (isa == simd::Isa::avx2 && count == 4) {
      std::mt19937_64* ptrs[4] = {&rngs[0], &rngs[1], &rngs[2], &rngs[3]};
      simd::anneal_avx2_x4(p, ptrs, rows);
    } else {
      for (int lane = 0; lane < count; ++lane) simd::anneal_scalar(p, rngs[lane], rows[lane]);
    }
    for (int lane = 0; lane < count; ++lane) ss.energies[first + lane] = q.energy(ss.row(first + lane));
  });
  return ss;
}

namespace {

// sum_k a_k x_k = rhs with a_k = +-1 over local variable indices.
struct Equality {
  std::vector<std::pair<int, int>> terms;
  int rhs = 0;
  bool coverage = false;
  std::string label;
  // Search state.
  int sum = 0;
  int free_pos = 0;
  int free_neg = 0;
};

class BranchAndBound {
 public:
  BranchAndBound(const VariableSet& vars, const ConstraintSet& cons, const ExactOptions& opt)
      : opt_(opt) {
    ids_ = vars.active_ids();
    const int n = static_cast<int>(ids_.size());
    std::vector<int> local(vars.size(), -1);
    for (int k = 0; k < n; ++k) local[ids_[k]] = k;
    value_.assign(n, -1);
    adj_.assign(n, {});
    cost_.assign(n, 0);
    for (int k = 0; k < n; ++k) cost_[k] = vars[ids_[k]].arc.i == 0 ? 1 : 0;

    bool standard = true;
    for (const auto& c : cons.coverage) {
      if (c.removed) {
        standard = false;
        continue;
      }
      Equality e;
      e.coverage = true;
      e.rhs = 1 - c.offset;
      e.label = cons.coverage_label(c.customer);
      for (int v : c.vars) e.terms.emplace_back(local[v], 1);
      add(std::move(e));
    }
    for (int f = 0; f < static_cast<int>(cons.flow.size()); ++f) {
      const auto& fc = cons.flow[f];
      if (fc.removed) {
        standard = false;
        continue;
      }
      Equality e;
      e.rhs = fc.out_offset - fc.in_offset;
      e.label = cons.flow_label(f);
      for (int v : fc.in) e.terms.emplace_back(local[v], 1);
      for (int v : fc.out) e.terms.emplace_back(local[v], -1);
      add(std::move(e));
    }
    // With every equality in place, each customer has one predecessor and
    // one successor, so fleet size = customers - customer-to-customer arcs
    // and a bipartite matching bounds the latter.
    if (standard) {
      num_customers_ = static_cast<int>(cons.coverage.size());
      for (int k = 0; k < vars.size(); ++k) {
        const ArcKey& a = vars[k].arc;
        const bool cc = a.i >= 1 && a.i <= num_customers_ && a.j >= 1 && a.j <= num_customers_;
        if (!cc || vars[k].status == VarStatus::fixed0) continue;
        match_arcs_.push_back({a.i - 1, a.j - 1, local[k]});
      }
      use_matching_ = true;
    }
    base_objective_ = cons.fixed_objective;
  }

  ExactResult run() {
    ExactResult res;
    res.var_ids = ids_;
    if (!propagate()) throw InfeasibleError(conflict_, "infeasible at the root: " + conflict_);
    res.root_fixings = static_cast<int>(trail_.size());
    dfs();
    res.nodes = nodes_;
    res.exhausted = !aborted_;
    if (best_ == INT_MAX) {
      if (aborted_) throw Error("exact search hit its node limit without a feasible assignment");
      const std::string who = first_conflict_.empty() ? std::string("coverage") : first_conflict_;
      throw InfeasibleError(who, "no assignment satisfies every constraint; first conflict at " + who);
    }
    res.values = best_values_;
    res.objective = best_;
    return res;
  }

 private:
  struct MatchArc {
    int from;
    int to;
    int local;  // -1 when the variable is already fixed to 1
  };

  void add(Equality e) {
    const int id = static_cast<int>(eqs_.size());
    for (const auto& [v, a] : e.terms) {
      adj_[v].emplace_back(id, a);
      (a > 0 ? e.free_pos : e.free_neg) += 1;
    }
    eqs_.push_back(std::move(e));
    queue_.push_back(id);
  }

  void assign(int v, int x) {
    value_[v] = x;
    trail_.push_back(v);
    objective_ += cost_[v] * x;
    for (const auto& [c, a] : adj_[v]) {
      Equality& e = eqs_[c];
      (a > 0 ? e.free_pos : e.free_neg) -= 1;
      e.sum += a * x;
      queue_.push_back(c);
    }
  }

  void undo_to(std::size_t mark) {
    while (trail_.size() > mark) {
      const int v = trail_.back();
      trail_.pop_back();
      const int x = value_[v];
      objective_ -= cost_[v] * x;
      for (const auto& [c, a] : adj_[v]) {
        Equality& e = eqs_[c];
        (a > 0 ? e.free_pos : e.free_neg) += 1;
        e.sum -= a * x;
      }
      value_[v] = -1;
    }
    queue_.clear();
  }

  bool propagate() {
    while (!queue_.empty()) {
      const int c = queue_.back();
      queue_.pop_back();
      Equality& e = eqs_[c];
      const int lo = e.sum - e.free_neg;
      const int hi = e.sum + e.free_pos;
      if (e.rhs < lo || e.rhs > hi) {
        conflict_ = e.label;
        if (first_conflict_.empty()) first_conflict_ = e.label;
        queue_.clear();
        return false;
      }
      if (e.free_pos + e.free_neg == 0 || (e.rhs != lo && e.rhs != hi)) continue;
      const bool at_hi = e.rhs == hi;
      for (const auto& [v, a] : e.terms) {
        if (value_[v] != -1) continue;
        assign(v, (a > 0) == at_hi ? 1 : 0);
      }
    }
    return true;
  }

  int max_matching() {
    const int n = num_customers_;
    std::vector<std::vector<int>> out(n);
    for (const auto& m : match_arcs_) {
      if (m.local >= 0 && value_[m.local] == 0) continue;
      out[m.from].push_back(m.to);
    }
    std::vector<int> owner(n, -1);
    std::vector<int> seen(n, -1);
    int size = 0;
    for (int u = 0; u < n; ++u) {
      if (out[u].empty()) continue;
      if (augment(u, u, out, owner, seen)) ++size;
    }
    return size;
  }

  static bool augment(int u, int stamp, const std::vector<std::vector<int>>& out,
                      std::vector<int>& owner, std::vector<int>& seen) {
    for (int w : out[u]) {
      if (seen[w] == stamp) continue;
      seen[w] = stamp;
      if (owner[w] == -1 || augment(owner[w], stamp, out, owner, seen)) {
        owner[w] = u;
        return true;
      }
    }
    return false;
  }

  int lower_bound() {
    int lb = base_objective_ + objective_;
    if (use_matching_) lb = std::max(lb, num_customers_ - max_matching());
    return lb;
  }

  void dfs() {
    if (aborted_) return;
    ++nodes_;
    if (opt_.node_limit && nodes_ > *opt_.node_limit) {
      aborted_ = true;
      return;
    }
    if (lower_bound() >= best_) return;

    // Open coverage constraint with the fewest candidates.
    int pick = -1;
    int pick_free = INT_MAX;
    for (int c = 0; c < static_cast<int>(eqs_.size()); ++c) {
      const Equality& e = eqs_[c];
      if (!e.coverage || e.sum >= e.rhs || e.free_pos == 0) continue;
      if (e.free_pos < pick_free) {
        pick = c;
        pick_free = e.free_pos;
      }
    }
    if (pick >= 0) {
      std::vector<int> cand;
      for (const auto& [v, a] : eqs_[pick].terms) {
        if (value_[v] == -1) cand.push_back(v);
      }
      std::stable_sort(cand.begin(), cand.end(),
                       [&](int x, int y) { return cost_[x] < cost_[y]; });
      for (int v : cand) {
        const std::size_t mark = trail_.size();
        assign(v, 1);
        if (propagate()) dfs();
        undo_to(mark);
        if (aborted_) return;
      }
      return;
    }

    int free_var = -1;
    for (int v = 0; v < static_cast<int>(value_.size()); ++v) {
      if (value_[v] == -1) {
        free_var = v;
        break;
      }
    }
    if (free_var < 0) {
      const int total = base_objective_ + objective_;
      if (total < best_) {
        best_ = total;
        best_values_.assign(value_.begin(), value_.end());
      }
      return;
    }
    for (int x : {0, 1}) {
      const std::size_t mark = trail_.size();
      assign(free_var, x);
      if (propagate()) dfs();
      undo_to(mark);
      if (aborted_) return;
    }
  }

  ExactOptions opt_;
  std::vector<int> ids_;
  std::vector<int> value_;
  std::vector<int> cost_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<Equality> eqs_;
  std::vector<int> queue_;
  std::vector<int> trail_;
  std::vector<MatchArc> match_arcs_;
  bool use_matching_ = false;
  int num_customers_ = 0;
  int base_objective_ = 0;
  int objective_ = 0;
  int best_ = INT_MAX;
  std::vector<std::uint8_t> best_values_;
  std::int64_t nodes_ = 0;
  bool aborted_ = false;
  std::string conflict_;
  std::string first_conflict_;
};

}  // namespace

ExactResult exact_solve(const VariableSet& vars, const ConstraintSet& cons,
                        const ExactOptions& options) {
  const int active = vars.active_count();
  if (active > options.limit) throw LimitExceededError(active, options.limit);
  BranchAndBound bb(vars, cons, options);
  return bb.run();
}

SampleSet SaSampler::sample(const Model&, const Subproblem& sp, const SampleRequest& req) {
  SaParams params;
  params.reads = req.reads;
  params.sweeps = req.sweeps;
  params.seed = req.seed;
  params.workers = workers_;
  params.isa = isa_;
  return sa_sample(sp.qubo, params);
}

SampleSet ExactSampler::sample(const Model& m, const Subproblem& sp, const SampleRequest& req) {
  if (sp.qubo.n == 0) throw EmptyModelError();
  ExactResult r = exact_solve(m.vars, m.cons, options_);
  if (r.var_ids != sp.var_ids) throw InvariantError("subproblem is stale relative to the model");
  SampleSet ss;
  ss.num_vars = sp.qubo.n;
  ss.num_reads = 1;
  ss.bits = r.values;
  ss.energies = {sp.qubo.energy(ss.row(0))};
  ss.info = {"exact", 1, 0, req.seed};
  return ss;
}

}  // namespace fsvrptw
