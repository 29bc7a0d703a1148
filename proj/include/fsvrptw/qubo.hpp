#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace fsvrptw {

struct QuadTerm {
  int a = 0;  // a < b
  int b = 0;
  double coeff = 0.0;

  friend bool operator==(const QuadTerm&, const QuadTerm&) = default;
};

// E(x) = offset + sum_a linear[a] x_a + sum_{a<b} J_ab x_a x_b, x binary.
struct Qubo {
  int n = 0;
  std::vector<double> linear;
  std::vector<QuadTerm> quadratic;  // sorted by (a, b), no zero entries
  double offset = 0.0;

  double energy(std::span<const std::uint8_t> x) const;

  friend bool operator==(const Qubo&, const Qubo&) = default;
};

// H(Z) = constant + sum_a h_a Z_a + sum_{a<b} J_ab Z_a Z_b, Z in {-1, +1}.
struct IsingModel {
  int n = 0;
  std::vector<double> h;
  std::vector<QuadTerm> couplings;
  double constant = 0.0;

  double energy(std::span<const std::int8_t> spins) const;
};

IsingModel to_ising(const Qubo& q);

// Symmetric sparse view used by the samplers: row k lists every partner of
// variable k with the pair coefficient.
struct CouplingGraph {
  std::vector<std::int32_t> row_ptr;
  std::vector<std::int32_t> cols;
  std::vector<double> weights;
};

CouplingGraph coupling_graph(const Qubo& q);

// Exchange format: "n m offset" then m lines "a b coeff" with a <= b; a == b
// carries the linear term. Numbers use the shortest round-trip form.
void write_qubo(std::ostream& out, const Qubo& q);
Qubo read_qubo(std::istream& in);

}  // namespace fsvrptw
