#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace fsvrptw::simd {

enum class Isa : std::uint8_t { scalar, avx2 };

std::string_view isa_name(Isa isa);

// Best variant the CPU supports. FSVRPTW_SIMD=scalar|avx2 overrides; asking
// for avx2 on a CPU without it falls back to scalar.
Isa detect_isa();
bool isa_supported(Isa isa);

// Read-only view of a QUBO in the layout the annealing kernels want.
struct AnnealProblem {
  int n = 0;
  const double* linear = nullptr;
  const std::int32_t* row_ptr = nullptr;  // n + 1 entries
  const std::int32_t* cols = nullptr;
  const double* weights = nullptr;
  std::span<const double> betas;  // one inverse temperature per sweep
};

// Uniform in (0, 1): 53 random bits, centred in their cell so 0 never occurs.
inline double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// One Metropolis read: random start, then one in-order sweep per beta. Every
// visit consumes exactly one RNG draw, so any lane layout reproduces it.
void anneal_scalar(const AnnealProblem& p, std::mt19937_64& rng, std::uint8_t* x);

// Four independent reads in lock step. Bit-identical to four anneal_scalar
// calls with the same generators.
void anneal_avx2_x4(const AnnealProblem& p, std::mt19937_64* rngs[4], std::uint8_t* x[4]);

// counts[k] += number of rows r with bits[r * n + k] != 0.
void column_counts_scalar(const std::uint8_t* bits, int rows, int n, std::uint32_t* counts);
void column_counts_avx2(const std::uint8_t* bits, int rows, int n, std::uint32_t* counts);

// Runtime-dispatched entry points.
void column_counts(Isa isa, const std::uint8_t* bits, int rows, int n, std::uint32_t* counts);

}  // namespace fsvrptw::simd
