#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "fsvrptw/simd/kernels.hpp"

namespace fsvrptw::simd {

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect_isa() {
  if (const char* env = std::getenv("FSVRPTW_SIMD")) {
    std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2") return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

void anneal_scalar(const AnnealProblem& p, std::mt19937_64& rng, std::uint8_t* x) {
  const int n = p.n;
  for (int k = 0; k < n; ++k) x[k] = static_cast<std::uint8_t>(rng() >> 63);
  // field[k]: energy change of raising x_k from 0 to 1 given the others.
  std::vector<double> field(n);
  for (int k = 0; k < n; ++k) {
    double f = p.linear[k];
    for (int e = p.row_ptr[k]; e < p.row_ptr[k + 1]; ++e) {
      if (x[p.cols[e]]) f += p.weights[e];
    }
    field[k] = f;
  }
  for (double beta : p.betas) {
    for (int k = 0; k < n; ++k) {
      const double delta = x[k] ? -field[k] : field[k];
      const double u = uniform_open(rng);
      bool accept = delta <= 0.0;
      if (!accept) {
        const double z = beta * delta;
        // exp(-38) is below the smallest possible u.
        accept = z <= 38.0 && u < std::exp(-z);
      }
      if (!accept) continue;
      const double dx = x[k] ? -1.0 : 1.0;
      x[k] ^= 1;
      for (int e = p.row_ptr[k]; e < p.row_ptr[k + 1]; ++e) field[p.cols[e]] += p.weights[e] * dx;
    }
  }
}

void column_counts_scalar(const std::uint8_t* bits, int rows, int n, std::uint32_t* counts) {
  for (int r = 0; r < rows; ++r) {
    const std::uint8_t* row = bits + static_cast<std::size_t>(r) * n;
    for (int k = 0; k < n; ++k) counts[k] += row[k] != 0;
  }
}

void column_counts(Isa isa, const std::uint8_t* bits, int rows, int n, std::uint32_t* counts) {
  if (isa == Isa::avx2) {
    column_counts_avx2(bits, rows, n, counts);
  } else {
    column_counts_scalar(bits, rows, n, counts);
  }
}

}  // namespace fsvrptw::simd
