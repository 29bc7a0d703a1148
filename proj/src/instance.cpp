#include "fsvrptw/instance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "fsvrptw/errors.hpp"

namespace fsvrptw {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::optional<double> to_number(std::string_view field) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

bool has_letters(std::string_view line) {
  return std::any_of(line.begin(), line.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  for (;;) {
    std::uint64_t r = rng();
    if (r < limit) return r % bound;
  }
}

double euclid(const Customer& a, const Customer& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<double> euclidean_matrix(const SubInstance& sub, bool truncate) {
  const int m = sub.num_nodes();
  auto node = [&](int k) -> const Customer& {
    return sub.is_customer(k) ? sub.customers[k - 1] : sub.depot;
  };
  std::vector<double> dist(static_cast<std::size_t>(m) * m, 0.0);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      double d = a == b ? 0.0 : euclid(node(a), node(b));
      if (truncate) d = std::floor(d * 10.0) / 10.0;
      dist[static_cast<std::size_t>(a) * m + b] = d;
    }
  }
  return dist;
}

nlohmann::json customer_json(const Customer& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["x"] = c.x;
  j["y"] = c.y;
  j["ready"] = c.ready;
  if (std::isinf(c.due)) {
    j["due"] = nullptr;
  } else {
    j["due"] = c.due;
  }
  j["service"] = c.service;
  return j;
}

Customer customer_from_json(const nlohmann::json& j) {
  Customer c;
  c.id = j.at("id").get<int>();
  c.x = j.value("x", 0.0);
  c.y = j.value("y", 0.0);
  c.ready = j.at("ready").get<double>();
  c.due = j.at("due").is_null() ? kInfinity : j.at("due").get<double>();
  c.service = j.at("service").get<double>();
  if (c.ready > c.due || c.service < 0.0) {
    throw ArgumentError("customer " + std::to_string(c.id) + " has an invalid window or service time");
  }
  return c;
}

}  // namespace

Instance parse_solomon(std::istream& in) {
  Instance inst;
  std::string line;
  int lineno = 0;
  bool in_table = false;
  bool saw_table = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (inst.name.empty()) {
      inst.name = std::string(fields[0]);
      continue;
    }
    if (!in_table) {
      if (fields.size() == 1 && fields[0] == "CUSTOMER") {
        in_table = true;
        saw_table = true;
      }
      continue;
    }
    if (has_letters(line)) {
      // Column header inside the table.
      if (fields[0] == "CUST") continue;
    }
    if (fields.size() != 7) {
      throw ParseError(lineno, "expected 7 columns in customer row, found " +
                                   std::to_string(fields.size()));
    }
    double v[7];
    for (int k = 0; k < 7; ++k) {
      auto num = to_number(fields[k]);
      if (!num) throw ParseError(lineno, "non-numeric field '" + std::string(fields[k]) + "'");
      v[k] = *num;
    }
    Customer c{static_cast<int>(v[0]), v[1], v[2], v[4], v[5], v[6]};
    if (c.ready > c.due || c.service < 0.0) {
      throw ParseError(lineno, "invalid time window or service time");
    }
    if (c.id == 0) {
      inst.depot = c;
    } else {
      inst.customers.push_back(c);
    }
  }
  if (!saw_table) throw ParseError(lineno, "missing CUSTOMER table");
  if (inst.customers.empty()) throw ParseError(lineno, "customer table has no customer rows");
  return inst;
}

Instance load_solomon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open instance file '" + path + "'");
  return parse_solomon(in);
}

SubInstance sample_customers(const Instance& instance, int n, std::uint64_t seed,
                             const SampleOptions& options) {
  const int total = static_cast<int>(instance.customers.size());
  if (n < 1 || n > total) {
    throw ArgumentError("cannot sample " + std::to_string(n) + " customers from " +
                        std::to_string(total));
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n)};
  std::mt19937_64 rng(seq);
  std::vector<int> order(total);
  for (int k = 0; k < total; ++k) order[k] = k;
  for (int k = 0; k < n; ++k) {
    auto pick = k + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(total - k)));
    std::swap(order[k], order[pick]);
  }
  order.resize(n);

  SubInstance sub;
  sub.name = instance.name;
  sub.seed = seed;
  sub.depot = instance.depot;
  for (int k : order) sub.customers.push_back(instance.customers[k]);
  std::sort(sub.customers.begin(), sub.customers.end(),
            [](const Customer& a, const Customer& b) { return a.id < b.id; });
  sub.dist = euclidean_matrix(sub, options.truncate_distances);
  return sub;
}

std::vector<double> usable_departures(const SubInstance& sub, int node,
                                      const std::vector<double>& points) {
  std::vector<double> out;
  if (node == 0) {
    out.push_back(0.0);
    return out;
  }
  const double lo = sub.ready(node) + sub.service(node);
  const double hi = sub.due(node) + sub.service(node);
  for (double p : points) {
    if (p >= lo && p <= hi) out.push_back(p);
  }
  return out;
}

TimeGrid build_time_grid(const SubInstance& sub, const GridConfig& config) {
  struct Window {
    double lo;  // earliest departure reachable from the depot
    double hi;  // latest departure with service started on time
    int node;
  };
  const int n = sub.num_customers();
  std::vector<Window> windows;
  windows.reserve(n);
  for (int j = 1; j <= n; ++j) {
    const double arrive = sub.d(0, j);
    Window w{std::max(sub.ready(j), arrive) + sub.service(j), sub.due(j) + sub.service(j), j};
    if (w.lo > w.hi) {
      throw DiscretizationError(j, "customer " + std::to_string(sub.customers[j - 1].id) +
                                       " cannot be reached from the depot before its due time");
    }
    windows.push_back(w);
  }
  // Latest-starting windows first; a window reuses any point already inside it.
  // Placing each new point at the window's left end makes the point set a
  // minimum stabbing set of the windows.
  std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) {
    if (a.lo != b.lo) return a.lo > b.lo;
    return a.node < b.node;
  });
  std::vector<double> chosen;
  for (const auto& w : windows) {
    bool covered = std::any_of(chosen.begin(), chosen.end(),
                               [&](double p) { return p >= w.lo && p <= w.hi; });
    if (!covered) chosen.push_back(w.lo);
  }
  if (config.extra_points_per_window > 0) {
    const int k = config.extra_points_per_window;
    for (const auto& w : windows) {
      for (int m = 1; m <= k; ++m) chosen.push_back(w.lo + (w.hi - w.lo) * m / k);
    }
  }

  TimeGrid grid;
  grid.points = chosen;
  grid.points.push_back(0.0);
  std::sort(grid.points.begin(), grid.points.end());
  grid.points.erase(std::unique(grid.points.begin(), grid.points.end()), grid.points.end());

  grid.departures.assign(sub.num_nodes(), {});
  grid.departures[0] = {0.0};
  double horizon = 0.0;
  for (int j = 1; j <= n; ++j) {
    grid.departures[j] = usable_departures(sub, j, grid.points);
    for (double p : grid.departures[j]) horizon = std::max(horizon, p + sub.d(j, sub.sink()));
  }
  if (horizon <= grid.points.back()) horizon = grid.points.back() + 1.0;
  grid.points.push_back(horizon);
  grid.departures[sub.sink()] = {horizon};
  return grid;
}

nlohmann::json to_json(const SubInstance& sub) {
  nlohmann::json j;
  j["name"] = sub.name;
  j["seed"] = sub.seed;
  j["depot"] = customer_json(sub.depot);
  j["customers"] = nlohmann::json::array();
  for (const auto& c : sub.customers) j["customers"].push_back(customer_json(c));
  const int m = sub.num_nodes();
  j["dist"] = nlohmann::json::array();
  for (int a = 0; a < m; ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (int b = 0; b < m; ++b) row.push_back(sub.d(a, b));
    j["dist"].push_back(std::move(row));
  }
  return j;
}

SubInstance sub_instance_from_json(const nlohmann::json& j) {
  SubInstance sub;
  sub.name = j.value("name", std::string("unnamed"));
  sub.seed = j.value("seed", std::uint64_t{0});
  sub.depot = customer_from_json(j.at("depot"));
  for (const auto& c : j.at("customers")) sub.customers.push_back(customer_from_json(c));
  const int m = sub.num_nodes();
  if (j.contains("dist")) {
    const auto& rows = j.at("dist");
    if (static_cast<int>(rows.size()) != m) {
      throw ArgumentError("distance matrix must have " + std::to_string(m) + " rows");
    }
    sub.dist.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int a = 0; a < m; ++a) {
      if (static_cast<int>(rows[a].size()) != m) {
        throw ArgumentError("distance matrix row " + std::to_string(a) + " has wrong length");
      }
      for (int b = 0; b < m; ++b) sub.dist[static_cast<std::size_t>(a) * m + b] = rows[a][b].get<double>();
    }
  } else {
    sub.dist = euclidean_matrix(sub, false);
  }
  return sub;
}

Fixture fixture_from_json(const nlohmann::json& j) {
  Fixture fx;
  fx.sub = sub_instance_from_json(j);
  if (j.contains("grid")) fx.grid = j.at("grid").get<std::vector<double>>();
  if (j.contains("arcs")) {
    const int sink = fx.sub.sink();
    auto node = [&](const nlohmann::json& v) {
      if (v.is_string()) {
        if (v.get<std::string>() == "N") return sink;
        throw ArgumentError("unknown node label '" + v.get<std::string>() + "'");
      }
      return v.get<int>();
    };
    std::vector<ArcKey> arcs;
    for (const auto& a : j.at("arcs")) {
      if (a.size() != 4) throw ArgumentError("arc entries must be [i, s, j, t]");
      arcs.push_back(ArcKey{node(a[0]), a[1].get<double>(), node(a[2]), a[3].get<double>()});
    }
    std::sort(arcs.begin(), arcs.end());
    fx.arcs = std::move(arcs);
  }
  return fx;
}

Fixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open fixture file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("fixture '" + path + "' is not valid JSON: " + e.what());
  }
  return fixture_from_json(j);
}

}  // namespace fsvrptw
