#include "fsvrptw/qubo.hpp"

#include <charconv>
#include <sstream>
#include <string>

#include "fsvrptw/errors.hpp"
#include "fsvrptw/format.hpp"

namespace fsvrptw {

double Qubo::energy(std::span<const std::uint8_t> x) const {
  double e = offset;
  for (int a = 0; a < n; ++a) {
    if (x[a]) e += linear[a];
  }
  for (const auto& t : quadratic) {
    if (x[t.a] && x[t.b]) e += t.coeff;
  }
  return e;
}

double IsingModel::energy(std::span<const std::int8_t> spins) const {
  double e = constant;
  for (int a = 0; a < n; ++a) e += h[a] * spins[a];
  for (const auto& t : couplings) e += t.coeff * spins[t.a] * spins[t.b];
  return e;
}

IsingModel to_ising(const Qubo& q) {
  IsingModel m;
  m.n = q.n;
  m.h.assign(q.n, 0.0);
  m.constant = q.offset;
  for (int a = 0; a < q.n; ++a) {
    m.h[a] += q.linear[a] / 2.0;
    m.constant += q.linear[a] / 2.0;
  }
  for (const auto& t : q.quadratic) {
    const double quarter = t.coeff / 4.0;
    m.couplings.push_back({t.a, t.b, quarter});
    m.h[t.a] += quarter;
    m.h[t.b] += quarter;
    m.constant += quarter;
  }
  return m;
}

CouplingGraph coupling_graph(const Qubo& q) {
  CouplingGraph g;
  std::vector<std::int32_t> degree(q.n, 0);
  for (const auto& t : q.quadratic) {
    ++degree[t.a];
    ++degree[t.b];
  }
  g.row_ptr.assign(q.n + 1, 0);
  for (int a = 0; a < q.n; ++a) g.row_ptr[a + 1] = g.row_ptr[a] + degree[a];
  g.cols.resize(g.row_ptr.back());
  g.weights.resize(g.row_ptr.back());
  std::vector<std::int32_t> fill(g.row_ptr.begin(), g.row_ptr.end() - 1);
  // Terms are sorted by (a, b), so each row ends up sorted by partner index.
  for (const auto& t : q.quadratic) {
    g.cols[fill[t.a]] = t.b;
    g.weights[fill[t.a]++] = t.coeff;
  }
  for (const auto& t : q.quadratic) {
    g.cols[fill[t.b]] = t.a;
    g.weights[fill[t.b]++] = t.coeff;
  }
  for (int a = 0; a < q.n; ++a) {
    // Partners below a were appended after partners above a; restore order.
    auto begin = g.row_ptr[a];
    auto end = g.row_ptr[a + 1];
    std::vector<std::pair<std::int32_t, double>> row;
    for (auto k = begin; k < end; ++k) row.emplace_back(g.cols[k], g.weights[k]);
    std::sort(row.begin(), row.end());
    for (auto k = begin; k < end; ++k) {
      g.cols[k] = row[k - begin].first;
      g.weights[k] = row[k - begin].second;
    }
  }
  return g;
}

void write_qubo(std::ostream& out, const Qubo& q) {
  std::size_t m = q.quadratic.size();
  for (double v : q.linear) m += v != 0.0 ? 1 : 0;
  out << q.n << ' ' << m << ' ' << format_double(q.offset) << '\n';
  std::size_t next = 0;
  for (int a = 0; a < q.n; ++a) {
    if (q.linear[a] != 0.0) out << a << ' ' << a << ' ' << format_double(q.linear[a]) << '\n';
    while (next < q.quadratic.size() && q.quadratic[next].a == a) {
      const auto& t = q.quadratic[next++];
      out << t.a << ' ' << t.b << ' ' << format_double(t.coeff) << '\n';
    }
  }
}

Qubo read_qubo(std::istream& in) {
  Qubo q;
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty QUBO file");
  std::size_t m = 0;
  {
    std::istringstream head(line);
    std::string offset;
    if (!(head >> q.n >> m >> offset) || q.n < 0) throw ParseError(1, "expected 'n m offset'");
    q.offset = parse_double(offset, 1);
  }
  q.linear.assign(q.n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    ++lineno;
    if (!std::getline(in, line)) throw ParseError(lineno, "missing coefficient line");
    std::istringstream row(line);
    int a = 0;
    int b = 0;
    std::string coeff;
    if (!(row >> a >> b >> coeff)) throw ParseError(lineno, "expected 'a b coeff'");
    if (a < 0 || b < a || b >= q.n) throw ParseError(lineno, "index out of range or a > b");
    double v = parse_double(coeff, lineno);
    if (a == b) {
      q.linear[a] = v;
    } else {
      q.quadratic.push_back({a, b, v});
    }
  }
  std::sort(q.quadratic.begin(), q.quadratic.end(), [](const QuadTerm& x, const QuadTerm& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  return q;
}

}  // namespace fsvrptw
