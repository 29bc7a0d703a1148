#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsvrptw/model.hpp"
#include "fsvrptw/qubo.hpp"
#include "fsvrptw/simd/kernels.hpp"

namespace fsvrptw {

struct SamplerInfo {
  std::string name;
  int reads = 0;
  int sweeps = 0;  // annealing budget; 0 for the exact backend
  std::uint64_t seed = 0;
};

struct SampleSet {
  int num_vars = 0;
  int num_reads = 0;
  std::vector<std::uint8_t> bits;  // num_reads rows of num_vars
  std::vector<double> energies;
  SamplerInfo info;

  std::span<const std::uint8_t> row(int r) const {
    return {bits.data() + static_cast<std::size_t>(r) * num_vars,
            static_cast<std::size_t>(num_vars)};
  }
};

// CSV "read,energy,bits" with bits as a 0/1 string in QUBO index order.
void write_sample_csv(std::ostream& out, const SampleSet& ss);

// Fraction of reads with x_k = 1, per variable.
std::vector<double> one_body_expectations(const SampleSet& ss,
                                          std::optional<simd::Isa> isa = std::nullopt);

struct SaParams {
  int reads = 1000;
  int sweeps = 1000;
  std::uint64_t seed = 0;
  int workers = 1;  // 0 means one per hardware thread
  std::optional<std::pair<double, double>> beta_range;  // (hot, cold)
  std::optional<simd::Isa> isa;
};

// (ln 2 / largest single-flip change, ln 100 / smallest nonzero coefficient).
std::pair<double, double> default_beta_range(const Qubo& q);
std::vector<double> beta_schedule(double hot, double cold, int sweeps);

// Read r uses its own generator seeded from (seed, r), so results do not
// depend on the worker count or the kernel variant.
SampleSet sa_sample(const Qubo& q, const SaParams& params);

struct ExactOptions {
  int limit = 40;                          // active variables
  std::optional<std::int64_t> node_limit;  // search nodes before giving up
};

struct ExactResult {
  std::vector<int> var_ids;           // active variables, index order
  std::vector<std::uint8_t> values;   // aligned with var_ids
  int objective = 0;                  // total depot arcs, fixed ones included
  std::int64_t nodes = 0;
  bool exhausted = false;             // search finished, so optimality is proven
  int root_fixings = 0;               // variables decided by propagation at the root
};

// Branch and bound over the surviving equalities with unit propagation.
// Throws LimitExceededError above options.limit and InfeasibleError naming a
// constraint when no assignment exists.
ExactResult exact_solve(const VariableSet& vars, const ConstraintSet& cons,
                        const ExactOptions& options = {});
inline ExactResult exact_solve(const Model& m, const ExactOptions& options = {}) {
  return exact_solve(m.vars, m.cons, options);
}

struct SampleRequest {
  int reads = 1000;
  int sweeps = 1000;
  std::uint64_t seed = 0;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::string name() const = 0;
  virtual bool is_exact() const { return false; }
  // Throws EmptyModelError when the subproblem has no variables.
  virtual SampleSet sample(const Model& m, const Subproblem& sp, const SampleRequest& req) = 0;
};

class SaSampler : public Sampler {
 public:
  explicit SaSampler(int workers = 1, std::optional<simd::Isa> isa = std::nullopt)
      : workers_(workers), isa_(isa) {}
  std::string name() const override { return "sa"; }
  SampleSet sample(const Model& m, const Subproblem& sp, const SampleRequest& req) override;

 private:
  int workers_;
  std::optional<simd::Isa> isa_;
};

class ExactSampler : public Sampler {
 public:
  explicit ExactSampler(ExactOptions options = {}) : options_(options) {}
  std::string name() const override { return "exact"; }
  bool is_exact() const override { return true; }
  int limit() const { return options_.limit; }
  SampleSet sample(const Model& m, const Subproblem& sp, const SampleRequest& req) override;

 private:
  ExactOptions options_;
};

}  // namespace fsvrptw
