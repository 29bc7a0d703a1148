// Built with -mavx2 and without FMA contraction: lane results must match
// the scalar kernel bit for bit.
#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

#include <algorithm>
#include <cmath>
#include <vector>

#include "fsvrptw/simd/kernels.hpp"

namespace fsvrptw::simd {

#if defined(__x86_64__) || defined(__i386__)

void anneal_avx2_x4(const AnnealProblem& p, std::mt19937_64* rngs[4], std::uint8_t* x[4]) {
  const int n = p.n;
  // Lane-interleaved state: field[k * 4 + lane], bit[k * 4 + lane].
  std::vector<double> field_store(static_cast<std::size_t>(n) * 4 + 4);
  double* field = field_store.data();
  std::vector<std::uint8_t> bit(static_cast<std::size_t>(n) * 4);

  for (int lane = 0; lane < 4; ++lane) {
    for (int k = 0; k < n; ++k) bit[k * 4 + lane] = static_cast<std::uint8_t>((*rngs[lane])() >> 63);
  }
  for (int lane = 0; lane < 4; ++lane) {
    for (int k = 0; k < n; ++k) {
      double f = p.linear[k];
      for (int e = p.row_ptr[k]; e < p.row_ptr[k + 1]; ++e) {
        if (bit[p.cols[e] * 4 + lane]) f += p.weights[e];
      }
      field[k * 4 + lane] = f;
    }
  }

  alignas(32) double dx[4];
  for (double beta : p.betas) {
    for (int k = 0; k < n; ++k) {
      bool any = false;
      for (int lane = 0; lane < 4; ++lane) {
        std::uint8_t& b = bit[k * 4 + lane];
        const double f = field[k * 4 + lane];
        const double delta = b ? -f : f;
        const double u = uniform_open(*rngs[lane]);
        bool accept = delta <= 0.0;
        if (!accept) {
          const double z = beta * delta;
          accept = z <= 38.0 && u < std::exp(-z);
        }
        if (accept) {
          dx[lane] = b ? -1.0 : 1.0;
          b ^= 1;
          any = true;
        } else {
          dx[lane] = 0.0;
        }
      }
      if (!any) continue;
      const __m256d step = _mm256_load_pd(dx);
      for (int e = p.row_ptr[k]; e < p.row_ptr[k + 1]; ++e) {
        double* target = field + static_cast<std::size_t>(p.cols[e]) * 4;
        const __m256d w = _mm256_set1_pd(p.weights[e]);
        _mm256_storeu_pd(target, _mm256_add_pd(_mm256_loadu_pd(target), _mm256_mul_pd(w, step)));
      }
    }
  }
  for (int lane = 0; lane < 4; ++lane) {
    for (int k = 0; k < n; ++k) x[lane][k] = bit[k * 4 + lane];
  }
}

void column_counts_avx2(const std::uint8_t* bits, int rows, int n, std::uint32_t* counts) {
  const __m256i one = _mm256_set1_epi8(1);
  const __m256i zero = _mm256_setzero_si256();
  int k = 0;
  for (; k + 32 <= n; k += 32) {
    int r = 0;
    while (r < rows) {
      // Byte counters saturate after 255 rows; flush before that.
      const int chunk_end = std::min(rows, r + 255);
      __m256i acc = zero;
      for (; r < chunk_end; ++r) {
        const __m256i v = _mm256_loadu_si256(
            reinterpret_cast<const __m256i*>(bits + static_cast<std::size_t>(r) * n + k));
        acc = _mm256_add_epi8(acc, _mm256_min_epu8(v, one));
      }
      alignas(32) std::uint8_t lanes[32];
      _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
      for (int c = 0; c < 32; ++c) counts[k + c] += lanes[c];
    }
  }
  for (; k < n; ++k) {
    for (int r = 0; r < rows; ++r) counts[k] += bits[static_cast<std::size_t>(r) * n + k] != 0;
  }
}

#else

// Never dispatched on these targets (isa_supported reports false); kept so
// the symbols link.
void anneal_avx2_x4(const AnnealProblem& p, std::mt19937_64* rngs[4], std::uint8_t* x[4]) {
  for (int lane = 0; lane < 4; ++lane) anneal_scalar(p, *rngs[lane], x[lane]);
}

void column_counts_avx2(const std::uint8_t* bits, int rows, int n, std::uint32_t* counts) {
  column_counts_scalar(bits, rows, n, counts);
}

#endif

}  // namespace fsvrptw::simd
