#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fsvrptw {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Customer {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double ready = 0.0;    // earliest service start
  double due = 0.0;      // latest service start
  double service = 0.0;  // service duration
};

// A full benchmark file: the depot plus every customer row.
struct Instance {
  std::string name;
  Customer depot;
  std::vector<Customer> customers;
};

// Nodes are indexed 0 (origin depot), 1..n (customers), n+1 (sink depot).
struct SubInstance {
  std::string name;
  std::uint64_t seed = 0;
  Customer depot;
  std::vector<Customer> customers;
  std::vector<double> dist;  // (n+2)x(n+2), row-major

  int num_customers() const { return static_cast<int>(customers.size()); }
  int num_nodes() const { return num_customers() + 2; }
  int sink() const { return num_customers() + 1; }
  bool is_customer(int node) const { return node >= 1 && node <= num_customers(); }

  double d(int a, int b) const { return dist[static_cast<std::size_t>(a) * num_nodes() + b]; }

  // Depot duplicates carry the window [0, inf) and no service time.
  double ready(int node) const { return is_customer(node) ? customers[node - 1].ready : 0.0; }
  double due(int node) const { return is_customer(node) ? customers[node - 1].due : kInfinity; }
  double service(int node) const { return is_customer(node) ? customers[node - 1].service : 0.0; }
};

struct SampleOptions {
  // Truncate distances to one decimal.
  bool truncate_distances = false;
};

struct GridConfig {
  // Additional evenly spaced departure points inside each customer window.
  int extra_points_per_window = 0;
};

struct TimeGrid {
  std::vector<double> points;                   // sorted, distinct, points[0] == 0
  std::vector<std::vector<double>> departures;  // per node; [0] = {0}, [sink] = {horizon}

  double horizon() const { return points.back(); }
};

// Throws ParseError naming the offending line.
Instance parse_solomon(std::istream& in);
Instance load_solomon(const std::string& path);

// Deterministic for fixed (instance, n, seed). Customers are kept in
// ascending id order; distances are Euclidean.
SubInstance sample_customers(const Instance& instance, int n, std::uint64_t seed,
                             const SampleOptions& options = {});

TimeGrid build_time_grid(const SubInstance& sub, const GridConfig& config = {});

// Departure points usable by `node` taken from an arbitrary point set:
// t with t - q_j in [e_j, l_j] for customers.
std::vector<double> usable_departures(const SubInstance& sub, int node,
                                      const std::vector<double>& points);

// Canonical JSON form of a sub-instance; the golden tests compare its dump.
nlohmann::json to_json(const SubInstance& sub);
SubInstance sub_instance_from_json(const nlohmann::json& j);

// A self-contained instance file: a sub-instance plus, optionally, a
// hand-specified grid and initial arc set (x_{i,s,j,t} keys).
struct ArcKey {
  int i = 0;
  double s = 0.0;
  int j = 0;
  double t = 0.0;

  friend auto operator<=>(const ArcKey&, const ArcKey&) = default;
};

struct Fixture {
  SubInstance sub;
  std::optional<std::vector<double>> grid;
  std::optional<std::vector<ArcKey>> arcs;
};

Fixture load_fixture(const std::string& path);
Fixture fixture_from_json(const nlohmann::json& j);

}  // namespace fsvrptw
