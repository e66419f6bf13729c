#pragma once

// Network topologies and the average-consensus linear system built on them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <numbers>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace accgossip {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Raised when random graph generation cannot produce a connected graph.
class GenerationFailure : public std::runtime_error {
 public:
  explicit GenerationFailure(int attempts)
      : std::runtime_error("graph generation failed: no connected graph after " +
                           std::to_string(attempts) + " attempts"),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

namespace detail {

inline bool is_connected(std::size_t n, std::span<const Edge> edges) {
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto w : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == n;
}

}  // namespace detail

/// Undirected, connected, simple graph on nodes [0, n). Every edge is stored
/// with i < j; edge order is preserved because it fixes the row order of the
/// incidence system.
class Graph {
 public:
  Graph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n_ == 0) throw std::invalid_argument("graph must have at least one node");
    std::set<Edge> unique;
    for (auto& e : edges_) {
      if (e.i == e.j) throw std::invalid_argument("self-loop at node " + std::to_string(e.i));
      if (e.i >= n_ || e.j >= n_)
        throw std::invalid_argument("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                    ") out of range for n=" + std::to_string(n_));
      if (e.i > e.j) std::swap(e.i, e.j);
      if (!unique.insert(e).second)
        throw std::invalid_argument("duplicate edge (" + std::to_string(e.i) + "," +
                                    std::to_string(e.j) + ")");
    }
    if (!detail::is_connected(n_, edges_)) throw std::invalid_argument("graph is not connected");
    index_.reserve(edges_.size());
    for (std::size_t k = 0; k < edges_.size(); ++k) index_.emplace_back(edges_[k], k);
    std::sort(index_.begin(), index_.end());
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Position of `e` in edges(), i.e. its incidence-matrix row.
  std::optional<std::size_t> edge_index(Edge e) const {
    if (e.i > e.j) std::swap(e.i, e.j);
    auto it = std::lower_bound(index_.begin(), index_.end(), e,
                               [](const auto& entry, const Edge& key) { return entry.first < key; });
    if (it == index_.end() || it->first != e) return std::nullopt;
    return it->second;
  }

  bool has_edge(Edge e) const { return edge_index(e).has_value(); }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(n_, 0);
    for (const auto& e : edges_) {
      ++deg[e.i];
      ++deg[e.j];
    }
    return deg;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::pair<Edge, std::size_t>> index_;
};

inline Graph make_cycle(std::size_t n) {
  if (n < 3) throw std::invalid_argument("cycle needs n >= 3, got " + std::to_string(n));
  std::vector<Edge> edges;
  edges.reserve(n);
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  edges.push_back({0, n - 1});
  return Graph(n, std::move(edges));
}

/// side x side lattice; node (r, c) has index r * side + c.
inline Graph make_grid(std::size_t side) {
  if (side < 2) throw std::invalid_argument("grid needs side >= 2, got " + std::to_string(side));
  std::vector<Edge> edges;
  edges.reserve(2 * side * (side - 1));
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const auto u = r * side + c;
      if (c + 1 < side) edges.push_back({u, u + 1});
      if (r + 1 < side) edges.push_back({u, u + side});
    }
  }
  return Graph(side * side, std::move(edges));
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double rgg_radius(std::size_t n) {
  return std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
}

/// Edges (i, j), i < j, with Euclidean distance <= radius. Does not check
/// connectivity.
inline std::vector<Edge> geometric_edges(std::span<const Point> points, double radius) {
  std::vector<Edge> edges;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double dx = points[i].x - points[j].x;
      const double dy = points[i].y - points[j].y;
      if (dx * dx + dy * dy <= r2) edges.push_back({i, j});
    }
  }
  return edges;
}

/// Random geometric graph from fixed points; throws if not connected.
inline Graph rgg_from_points(std::span<const Point> points, double radius) {
  return Graph(points.size(), geometric_edges(points, radius));
}

inline constexpr int kDefaultRggRetries = 100;

/// Random geometric graph on the unit square with radius sqrt(log(n)/n).
/// Disconnected samples are redrawn from the next derived seed.
inline Graph make_rgg(std::size_t n, std::uint64_t seed, int max_attempts = kDefaultRggRetries) {
  if (n < 2) throw std::invalid_argument("rgg needs n >= 2, got " + std::to_string(n));
  const double radius = rgg_radius(n);
  std::vector<Point> points(n);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, {stream::kRggPoints, static_cast<std::uint64_t>(attempt)}));
    for (auto& p : points) {
      p.x = rng.uniform01();
      p.y = rng.uniform01();
    }
    auto edges = geometric_edges(points, radius);
    if (detail::is_connected(n, edges)) return Graph(n, std::move(edges));
  }
  throw GenerationFailure(max_attempts);
}

/// The normalized incidence system A x = 0 of a graph together with its
/// Laplacian. Row e of A is (e_i - e_j) / sqrt(2) for edge e = (i, j).
class IncidenceSystem {
 public:
  explicit IncidenceSystem(Graph graph) : graph_(std::move(graph)) {
    const auto n = graph_.node_count();
    const auto m = graph_.edge_count();
    a_ = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    b_ = Vector::Zero(static_cast<Eigen::Index>(m));
    laplacian_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double w = 1.0 / std::numbers::sqrt2;
    for (std::size_t row = 0; row < m; ++row) {
      const auto [i, j] = graph_.edges()[row];
      const auto r = static_cast<Eigen::Index>(row);
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      a_(r, ii) = w;
      a_(r, jj) = -w;
      laplacian_(ii, ii) += 1.0;
      laplacian_(jj, jj) += 1.0;
      laplacian_(ii, jj) -= 1.0;
      laplacian_(jj, ii) -= 1.0;
    }
  }

  const Graph& graph() const noexcept { return graph_; }
  const Matrix& a() const noexcept { return a_; }
  const Vector& b() const noexcept { return b_; }
  const Matrix& laplacian() const noexcept { return laplacian_; }
  std::size_t rows() const noexcept { return graph_.edge_count(); }
  std::size_t cols() const noexcept { return graph_.node_count(); }

 private:
  Graph graph_;
  Matrix a_;
  Vector b_;
  Matrix laplacian_;
};

inline IncidenceSystem build_system(Graph graph) { return IncidenceSystem(std::move(graph)); }

// Edge-list text format: first line "n m", then one "i j" line per edge
// (zero-based, i < j, in graph edge order).

inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (const auto& e : g.edges()) out << e.i << ' ' << e.j << '\n';
}

inline Graph read_edge_list(std::istream& in) {
  std::size_t n = 0, m = 0;
  if (!(in >> n >> m)) throw std::runtime_error("edge list: missing 'n m' header");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    Edge e;
    if (!(in >> e.i >> e.j))
      throw std::runtime_error("edge list: expected " + std::to_string(m) + " edges, read " +
                               std::to_string(k));
    edges.push_back(e);
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error("edge list: trailing data '" + extra + "'");
  return Graph(n, std::move(edges));
}

inline void save_graph(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_edge_list(out, g);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  try {
    return read_edge_list(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace accgossip
