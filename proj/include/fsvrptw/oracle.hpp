#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsvrptw/greedy.hpp"
#include "fsvrptw/model.hpp"
#include "fsvrptw/samplers.hpp"

namespace fsvrptw {

struct OracleResult {
  int optimum = 0;
  std::vector<int> var_ids;
  std::vector<std::uint8_t> assignment;  // aligned with var_ids
  std::int64_t nodes = 0;
  bool exhausted = false;
  std::optional<int> exhaustive_optimum;  // set when the brute-force check ran
};

struct OracleOptions {
  int limit = 400;             // active variables the branch and bound accepts
  int exhaustive_limit = 22;   // brute-force cross-check up to this size
};

// Minimum fleet size of the untouched model. Throws InfeasibleError naming
// the constraint (or customer) that cannot be met, LimitExceededError above
// options.limit and InvariantError if the two solvers disagree.
OracleResult oracle_optimum(const Model& m, const OracleOptions& options = {});

// Brute force over every assignment of the active variables; nullopt when
// none satisfies the constraints. Refuses more than 30 variables.
std::optional<int> exhaustive_optimum(const Model& m);

// Routes traced from (0,0) along the arcs set to one. nullopt when the arcs
// do not form clean depot-to-depot chains.
std::optional<std::vector<Path>> decode_routes(const Model& m, std::span<const int> var_ids,
                                               std::span<const std::uint8_t> bits);

struct FilteringResult {
  std::optional<Solution> solution;
  int feasible_samples = 0;
  int chosen_read = -1;
  double chosen_energy = 0.0;
};

// One sampler call on the whole model; the lowest-energy sample (ties to
// the lower read index) that decodes into valid routes wins.
FilteringResult filtering_baseline(const Model& m, Sampler& sampler, const SampleRequest& req);

// Oracle results on disk, one JSON file per (instance, grid) content hash.
class OracleCache {
 public:
  explicit OracleCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  static std::string key(const SubInstance& sub, const TimeGrid& grid);
  std::optional<OracleResult> get(const std::string& key) const;
  void put(const std::string& key, const OracleResult& r) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace fsvrptw
