#ifndef HCDIST_VERIFY_HPP
#define HCDIST_VERIFY_HPP

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcdist/graph.hpp"

namespace hcdist {

/// Each node's two declared cycle neighbors; kNoNode marks a missing slot.
struct HcCertificate {
  std::vector<std::array<NodeId, 2>> ends;

  HcCertificate() = default;
  explicit HcCertificate(std::size_t n) : ends(n, {kNoNode, kNoNode}) {}

  std::size_t size() const noexcept { return ends.size(); }
  friend bool operator==(const HcCertificate&, const HcCertificate&) = default;
};

enum class CheckFailure : std::uint8_t { None, DegreeViolation, NonEdge, Inconsistent, MultipleCycles };

constexpr std::string_view to_string(CheckFailure f) noexcept {
  switch (f) {
    case CheckFailure::None: return "None";
    case CheckFailure::DegreeViolation: return "DegreeViolation";
    case CheckFailure::NonEdge: return "NonEdge";
    case CheckFailure::Inconsistent: return "Inconsistent";
    case CheckFailure::MultipleCycles: return "MultipleCycles";
  }
  return "?";
}

struct CheckResult {
  CheckFailure failure = CheckFailure::None;
  NodeId u = kNoNode;
  NodeId v = kNoNode;

  bool ok() const noexcept { return failure == CheckFailure::None; }
  explicit operator bool() const noexcept { return ok(); }
};

/// Accepts iff the declarations form one cycle through all n nodes of g.
inline CheckResult check_certificate(const Graph& g, const HcCertificate& cert) {
  const std::size_t n = g.size();
  for (NodeId v = 0; v < n; ++v) {
    if (v >= cert.size()) return {CheckFailure::DegreeViolation, v, kNoNode};
    auto [a, b] = cert.ends[v];
    if (a == kNoNode || b == kNoNode || a == b || a == v || b == v || a >= n || b >= n) {
      return {CheckFailure::DegreeViolation, v, kNoNode};
    }
  }
  if (cert.size() != n) return {CheckFailure::DegreeViolation, static_cast<NodeId>(n), kNoNode};
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId w : cert.ends[v]) {
      if (!g.has_edge(v, w)) return {CheckFailure::NonEdge, v, w};
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId w : cert.ends[v]) {
      if (cert.ends[w][0] != v && cert.ends[w][1] != v) return {CheckFailure::Inconsistent, v, w};
    }
  }
  // Consistent degree-2 declarations are a union of disjoint cycles; walk one.
  if (n == 0) return {};
  NodeId prev = 0, cur = cert.ends[0][0];
  std::size_t hops = 1;
  while (cur != 0) {
    const NodeId next = cert.ends[cur][0] == prev ? cert.ends[cur][1] : cert.ends[cur][0];
    prev = cur;
    cur = next;
    ++hops;
  }
  if (hops != n) return {CheckFailure::MultipleCycles, 0, static_cast<NodeId>(hops)};
  return {};
}

inline HcCertificate certificate_from_cycle(std::size_t n, const std::vector<NodeId>& cycle) {
  HcCertificate c(n);
  const std::size_t k = cycle.size();
  for (std::size_t i = 0; i < k; ++i) {
    c.ends[cycle[i]] = {cycle[(i + k - 1) % k], cycle[(i + 1) % k]};
  }
  return c;
}

/// Node order of an accepted certificate starting at node 0.
inline std::vector<NodeId> cycle_from_certificate(const HcCertificate& cert) {
  std::vector<NodeId> out;
  if (cert.size() == 0) return out;
  NodeId prev = cert.ends[0][1], cur = 0;
  do {
    out.push_back(cur);
    const NodeId next = cert.ends[cur][0] == prev ? cert.ends[cur][1] : cert.ends[cur][0];
    prev = cur;
    cur = next;
  } while (cur != 0 && out.size() <= cert.size());
  return out;
}

inline constexpr std::size_t kBruteForceMaxNodes = 14;

/// Exact search for a Hamiltonian cycle. Backtracks over paths from node 0
/// and memoizes (visited set, endpoint) states already shown to be dead.
inline std::optional<std::vector<NodeId>> brute_force_hamiltonian(const Graph& g) {
  const std::size_t n = g.size();
  if (n > kBruteForceMaxNodes) throw std::invalid_argument("brute force is limited to 14 nodes");
  if (n < 3) return std::nullopt;
  for (NodeId v = 0; v < n; ++v)
    if (g.degree(v) < 2) return std::nullopt;

  std::vector<std::uint32_t> adj(n, 0);
  for (NodeId v = 0; v < n; ++v)
    for (NodeId w : g.neighbors(v)) adj[v] |= 1u << w;
  const std::uint32_t full = (1u << n) - 1;
  // dead_bits[mask] bit `last`: no completion exists from that state.
  std::vector<std::uint16_t> dead_bits(std::size_t{1} << n, 0);
  std::vector<NodeId> path{0};

  auto search = [&](auto&& self, std::uint32_t mask, NodeId last) -> bool {
    if (mask == full) return (adj[last] & 1u) != 0;
    if (dead_bits[mask] & (1u << last)) return false;
    std::uint32_t cand = adj[last] & ~mask;
    while (cand) {
      const NodeId w = static_cast<NodeId>(__builtin_ctz(cand));
      cand &= cand - 1;
      path.push_back(w);
      if (self(self, mask | (1u << w), w)) return true;
      path.pop_back();
    }
    dead_bits[mask] |= static_cast<std::uint16_t>(1u << last);
    return false;
  };
  if (search(search, 1u, 0)) return path;
  return std::nullopt;
}

// Certificate text form: one line "node e1 e2" per node, ascending.
inline void write_certificate(std::ostream& os, const HcCertificate& cert) {
  for (NodeId v = 0; v < cert.size(); ++v) {
    os << v;
    for (NodeId w : cert.ends[v]) {
      os << ' ';
      if (w == kNoNode) os << -1;
      else os << w;
    }
    os << '\n';
  }
}

inline HcCertificate read_certificate(std::istream& is) {
  HcCertificate cert;
  long long v = 0, a = 0, b = 0;
  while (is >> v >> a >> b) {
    if (v != static_cast<long long>(cert.size())) throw std::runtime_error("certificate: nodes out of order");
    auto conv = [](long long x) { return x < 0 ? kNoNode : static_cast<NodeId>(x); };
    cert.ends.push_back({conv(a), conv(b)});
  }
  if (!is.eof()) throw std::runtime_error("certificate: malformed line");
  return cert;
}

}  // namespace hcdist

#endif  // HCDIST_VERIFY_HPP
