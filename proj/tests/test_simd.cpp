#include <doctest.h>

#include <cstring>
#include <random>

#include "fsvrptw/qubo.hpp"
#include "fsvrptw/samplers.hpp"
#include "fsvrptw/simd/kernels.hpp"
#include "support.hpp"

using namespace fsvrptw;

namespace {

Qubo random_qubo(int n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::bernoulli_distribution edge(density);
  Qubo q;
  q.n = n;
  for (int k = 0; k < n; ++k) q.linear.push_back(coef(rng));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (edge(rng)) q.quadratic.push_back({a, b, coef(rng)});
    }
  }
  q.offset = 0.5;
  return q;
}

struct Prepared {
  CouplingGraph g;
  std::vector<double> betas;
  simd::AnnealProblem p;
};

Prepared prepare(const Qubo& q, int sweeps) {
  Prepared out;
  out.g = coupling_graph(q);
  const auto [hot, cold] = default_beta_range(q);
  out.betas = beta_schedule(hot, cold, sweeps);
  out.p.n = q.n;
  out.p.linear = q.linear.data();
  out.p.row_ptr = out.g.row_ptr.data();
  out.p.cols = out.g.cols.data();
  out.p.weights = out.g.weights.data();
  out.p.betas = out.betas;
  return out;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar is always supported and the env override is honored") {
    CHECK(simd::isa_supported(simd::Isa::scalar));
    CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
    CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
    const simd::Isa isa = simd::detect_isa();
    CHECK(simd::isa_supported(isa));
  }

  TEST_CASE("avx2 annealing is bit-identical to four scalar reads") {
    if (!simd::isa_supported(simd::Isa::avx2)) {
      MESSAGE("avx2 unavailable on this CPU; equivalence not exercised");
      return;
    }
    for (int n : {1, 2, 5, 17, 64, 131}) {
      for (double density : {0.0, 0.1, 0.5}) {
        const Qubo q = random_qubo(n, density, static_cast<std::uint64_t>(n * 100 + density * 10));
        Prepared pr = prepare(q, 50);
        std::vector<std::uint8_t> ref(4 * n), vec(4 * n);
        std::mt19937_64 a[4], b[4];
        for (int lane = 0; lane < 4; ++lane) {
          a[lane].seed(1000 + lane);
          b[lane].seed(1000 + lane);
          simd::anneal_scalar(pr.p, a[lane], ref.data() + lane * n);
        }
        std::mt19937_64* ptrs[4] = {&b[0], &b[1], &b[2], &b[3]};
        std::uint8_t* rows[4] = {vec.data(), vec.data() + n, vec.data() + 2 * n, vec.data() + 3 * n};
        simd::anneal_avx2_x4(pr.p, ptrs, rows);
        CHECK(ref == vec);
        // Both consumed the same number of draws.
        for (int lane = 0; lane < 4; ++lane) CHECK(a[lane]() == b[lane]());
      }
    }
  }

  TEST_CASE("column counts agree across variants, including past the byte flush") {
    std::mt19937_64 rng(5);
    for (int rows : {1, 7, 255, 256, 1000}) {
      for (int n : {1, 31, 32, 33, 100}) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(rows) * n);
        for (auto& b : bits) b = (rng() >> 60) < 7 ? 1 : 0;
        std::vector<std::uint32_t> s(n, 0), v(n, 0), naive(n, 0);
        for (int r = 0; r < rows; ++r) {
          for (int k = 0; k < n; ++k) naive[k] += bits[static_cast<std::size_t>(r) * n + k];
        }
        simd::column_counts_scalar(bits.data(), rows, n, s.data());
        CHECK(s == naive);
        if (simd::isa_supported(simd::Isa::avx2)) {
          simd::column_counts_avx2(bits.data(), rows, n, v.data());
          CHECK(v == naive);
        }
        std::vector<std::uint32_t> d(n, 0);
        simd::column_counts(simd::detect_isa(), bits.data(), rows, n, d.data());
        CHECK(d == naive);
      }
    }
  }

  TEST_CASE("sa_sample output does not depend on kernel variant or worker count") {
    const Model m = fsvrptw::testing::solomon_model("R201.txt", 6, 2);
    const Subproblem sp = compile_qubo(m);
    SaParams base;
    base.reads = 37;  // not a multiple of four: exercises the scalar tail
    base.sweeps = 200;
    base.seed = 11;
    base.isa = simd::Isa::scalar;
    const SampleSet ref = sa_sample(sp.qubo, base);
    for (int workers : {1, 3, 0}) {
      for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2}) {
        SaParams p = base;
        p.workers = workers;
        p.isa = isa;
        const SampleSet ss = sa_sample(sp.qubo, p);
        CHECK(ss.bits == ref.bits);
        CHECK(ss.energies == ref.energies);
      }
    }
  }
}
