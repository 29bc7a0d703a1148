#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsvrptw/greedy.hpp"
#include "fsvrptw/instance.hpp"
#include "fsvrptw/model.hpp"
#include "fsvrptw/samplers.hpp"

namespace fsvrptw::testing {

inline std::string data_path(const std::string& name) { return std::string(FSVRPTW_DATA_DIR) + "/" + name; }

inline Model running_example() { return build_model(load_fixture(data_path("running_example.json"))); }

inline Model solomon_model(const std::string& file, int n, std::uint64_t seed) {
  static std::string cached_file;
  static Instance cached;
  if (cached_file != file) {
    cached = load_solomon(data_path(file));
    cached_file = file;
  }
  const SubInstance sub = sample_customers(cached, n, seed);
  return build_model(sub, build_time_grid(sub));
}

inline int var_id(const Model& m, int i, double s, int j, double t) {
  const int jj = j < 0 ? m.sub.sink() : j;
  const int ii = i < 0 ? m.sub.sink() : i;
  auto id = m.vars.find(ArcKey{ii, s, jj, t});
  return id ? *id : -1;
}

// Returns, for each call, reads whose per-variable frequency of ones matches
// a scripted expectation (a multiple of 1/reads). Variables without a script
// entry read as zero.
class ScriptedSampler : public Sampler {
 public:
  // script[call][variable id] = number of reads (out of `reads`) with x = 1.
  ScriptedSampler(int reads, std::vector<std::vector<std::pair<int, int>>> script)
      : reads_(reads), script_(std::move(script)) {}
  std::string name() const override { return "scripted"; }
  int calls = 0;

  SampleSet sample(const Model&, const Subproblem& sp, const SampleRequest&) override {
    if (sp.qubo.n == 0) throw EmptyModelError();
    SampleSet ss;
    ss.num_vars = sp.qubo.n;
    ss.num_reads = reads_;
    ss.bits.assign(static_cast<std::size_t>(reads_) * sp.qubo.n, 0);
    const auto& entries = calls < static_cast<int>(script_.size()) ? script_[calls]
                                                                   : std::vector<std::pair<int, int>>{};
    for (const auto& [var, ones] : entries) {
      for (std::size_t q = 0; q < sp.var_ids.size(); ++q) {
        if (sp.var_ids[q] != var) continue;
        for (int r = 0; r < ones; ++r) ss.bits[static_cast<std::size_t>(r) * sp.qubo.n + q] = 1;
      }
    }
    for (int r = 0; r < reads_; ++r) ss.energies.push_back(sp.qubo.energy(ss.row(r)));
    ss.info = {name(), reads_, 0, 0};
    ++calls;
    return ss;
  }

 private:
  int reads_;
  std::vector<std::vector<std::pair<int, int>>> script_;
};

// Selection of the two-path walkthrough at theta = 0.9 (threshold): the three
// arcs read as one in 9 of 10 samples, x_{0,0,1,1} in 8, the rest never.
// Second call: the lone survivor x_{0,0,1,1} in every read.
inline ScriptedSampler walkthrough_sampler(const Model& m) {
  const int a = var_id(m, 1, 1, -1, 2);
  const int b = var_id(m, 0, 0, 2, 3);
  const int c = var_id(m, 2, 3, -1, 3);
  const int d = var_id(m, 0, 0, 1, 1);
  return ScriptedSampler(10, {{{a, 9}, {b, 9}, {c, 9}, {d, 8}}, {{d, 10}}});
}

inline GreedyConfig walkthrough_config() {
  GreedyConfig g;
  g.theta = 0.9;
  g.mode = SelectMode::threshold;
  g.reads = 10;
  g.record_timing = false;
  return g;
}

}  // namespace fsvrptw::testing
