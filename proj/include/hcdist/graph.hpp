#ifndef HCDIST_GRAPH_HPP
#define HCDIST_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcdist/rng.hpp"

namespace hcdist {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

using Edge = std::pair<NodeId, NodeId>;

struct GnpParams;

/// Immutable undirected simple graph in compressed sparse row form.
/// Neighbor lists are sorted ascending; adjacency is symmetric.
class Graph {
 public:
  Graph() : offsets_(1, 0) {}

  /// Builds a graph from an arbitrary edge list. Duplicates (in either
  /// orientation) are merged; self-loops and out-of-range ids throw.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges) {
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) throw std::invalid_argument("edge endpoint out of range");
      if (u == v) throw std::invalid_argument("self-loop");
      canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

    Graph g;
    g.offsets_.assign(n + 1, 0);
    for (auto [u, v] : canon) {
      ++g.offsets_[u + 1];
      ++g.offsets_[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.adjacency_.resize(g.offsets_[n]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    // Canonical order fills every list ascending: lower neighbors arrive in
    // increasing u, higher neighbors in increasing v after them.
    for (auto [u, v] : canon) g.adjacency_[cursor[v]++] = u;
    for (auto [u, v] : canon) g.adjacency_[cursor[u]++] = v;
    for (std::size_t v = 0; v < n; ++v) {
      std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
                g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
    }
    return g;
  }

  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return adjacency_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(NodeId u, NodeId v) const noexcept {
    if (u >= size() || v >= size()) return false;
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  /// All edges as (u, v) with u < v in ascending lexicographic order.
  std::vector<Edge> edge_list() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < size(); ++u) {
      for (NodeId v : neighbors(u)) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  friend Graph generate_gnp(const GnpParams&);

  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
};

struct GnpParams {
  std::size_t n = 1;
  double p = 0.0;
  std::uint64_t seed = 0;
};

/// Pair {u, v} (u < v) is present iff hash(seed, u, v) falls below p.
inline bool gnp_pair_present(std::uint64_t seed, NodeId u, NodeId v, double p) noexcept {
  return to_unit(hash_combine(seed, u, v)) < p;
}

inline Graph generate_gnp(const GnpParams& params) {
  if (params.n < 1) throw std::invalid_argument("G(n,p) needs n >= 1");
  if (!(params.p >= 0.0 && params.p <= 1.0)) {
    throw std::invalid_argument("G(n,p) needs 0 <= p <= 1");
  }
  const std::size_t n = params.n;
  if (n > std::numeric_limits<NodeId>::max() - 1) throw std::invalid_argument("n too large");

  // Two passes over all pairs (count, then fill) keep peak memory at one
  // copy of the adjacency arrays.
  Graph g;
  g.offsets_.assign(n + 1, 0);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (gnp_pair_present(params.seed, u, v, params.p)) {
        ++g.offsets_[u + 1];
        ++g.offsets_[v + 1];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adjacency_.resize(g.offsets_[n]);
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (gnp_pair_present(params.seed, u, v, params.p)) {
        g.adjacency_[cursor[u]++] = v;
        g.adjacency_[cursor[v]++] = u;
      }
    }
  }
  return g;
}

/// Read-only view of the subgraph induced by a member set.
class InducedSubgraph {
 public:
  InducedSubgraph(const Graph& g, std::span<const NodeId> members)
      : graph_(&g), member_(g.size(), false) {
    for (NodeId v : members) {
      if (v >= g.size()) throw std::invalid_argument("member not in graph");
      if (!member_[v]) {
        member_[v] = true;
        members_.push_back(v);
      }
    }
    std::sort(members_.begin(), members_.end());
  }

  const std::vector<NodeId>& members() const noexcept { return members_; }
  bool contains(NodeId v) const noexcept { return v < member_.size() && member_[v]; }

  std::vector<NodeId> neighbors(NodeId v) const {
    std::vector<NodeId> out;
    if (!contains(v)) return out;
    for (NodeId w : graph_->neighbors(v)) {
      if (member_[w]) out.push_back(w);
    }
    return out;
  }

  bool has_edge(NodeId u, NodeId v) const noexcept {
    return contains(u) && contains(v) && graph_->has_edge(u, v);
  }

  std::vector<Edge> edge_list() const {
    std::vector<Edge> out;
    for (NodeId u : members_) {
      for (NodeId v : graph_->neighbors(u)) {
        if (u < v && member_[v]) out.emplace_back(u, v);
      }
    }
    return out;
  }

  std::size_t num_edges() const { return edge_list().size(); }

 private:
  const Graph* graph_;
  std::vector<bool> member_;
  std::vector<NodeId> members_;
};

inline constexpr std::int32_t kUnreachable = -1;

/// Shortest-path level of every node from root; kUnreachable if none.
inline std::vector<std::int32_t> bfs_levels(const Graph& g, NodeId root) {
  if (root >= g.size()) throw std::invalid_argument("bfs root not in graph");
  std::vector<std::int32_t> level(g.size(), kUnreachable);
  std::vector<NodeId> frontier{root};
  level[root] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    NodeId v = frontier[head];
    for (NodeId w : g.neighbors(v)) {
      if (level[w] == kUnreachable) {
        level[w] = level[v] + 1;
        frontier.push_back(w);
      }
    }
  }
  return level;
}

/// Largest finite level, or nullopt when some node is unreachable.
inline std::optional<std::size_t> eccentricity(const Graph& g, NodeId root) {
  std::size_t ecc = 0;
  for (std::int32_t l : bfs_levels(g, root)) {
    if (l == kUnreachable) return std::nullopt;
    ecc = std::max<std::size_t>(ecc, static_cast<std::size_t>(l));
  }
  return ecc;
}

/// nullopt means "disconnected".
inline std::optional<std::size_t> diameter(const Graph& g) {
  std::size_t d = 0;
  for (NodeId v = 0; v < g.size(); ++v) {
    auto e = eccentricity(g, v);
    if (!e) return std::nullopt;
    d = std::max(d, *e);
  }
  return d;
}

// Text dump: "n m" then one "u v" line per edge, u < v, lexicographic.
inline void write_graph(std::ostream& os, const Graph& g) {
  os << g.size() << ' ' << g.num_edges() << '\n';
  for (auto [u, v] : g.edge_list()) os << u << ' ' << v << '\n';
}

inline Graph read_graph(std::istream& is) {
  std::size_t n = 0, m = 0;
  if (!(is >> n >> m)) throw std::runtime_error("graph file: missing header");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    long long u = 0, v = 0;
    if (!(is >> u >> v)) throw std::runtime_error("graph file: truncated edge list");
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n ||
        static_cast<std::size_t>(v) >= n) {
      throw std::runtime_error("graph file: endpoint out of range");
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return Graph::from_edges(n, edges);
}

// Small fixed graphs used throughout tests and examples.
inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return Graph::from_edges(n, e);
}

inline Graph cycle_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u) e.emplace_back(u, static_cast<NodeId>((u + 1) % n));
  return Graph::from_edges(n, e);
}

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u + 1 < n; ++u) e.emplace_back(u, u + 1);
  return Graph::from_edges(n, e);
}

inline Graph star_graph(std::size_t leaves) {
  std::vector<Edge> e;
  for (NodeId v = 1; v <= leaves; ++v) e.emplace_back(0, v);
  return Graph::from_edges(leaves + 1, e);
}

inline Graph petersen_graph() {
  std::vector<Edge> e;
  for (NodeId i = 0; i < 5; ++i) {
    e.emplace_back(i, (i + 1) % 5);          // outer cycle
    e.emplace_back(i, i + 5);                // spokes
    e.emplace_back(i + 5, (i + 2) % 5 + 5);  // inner pentagram
  }
  return Graph::from_edges(10, e);
}

}  // namespace hcdist

#endif  // HCDIST_GRAPH_HPP
