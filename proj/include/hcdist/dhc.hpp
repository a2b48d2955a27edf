#ifndef HCDIST_DHC_HPP
#define HCDIST_DHC_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hcdist/graph.hpp"
#include "hcdist/primitives.hpp"
#include "hcdist/rng.hpp"
#include "hcdist/rotation.hpp"
#include "hcdist/runtime.hpp"
#include "hcdist/verify.hpp"

namespace hcdist {

// ---- colors -----------------------------------------------------------------

/// Color of node v: the first draw of its stream, uniform on [1, k].
inline std::uint32_t draw_color(NodeRng& rng, std::uint32_t k) {
  return static_cast<std::uint32_t>(rng.below(k)) + 1;
}

/// The coloring the distributed algorithms draw for (seed, k), computed
/// without a network.
inline std::vector<std::uint32_t> assign_colors(std::size_t n, std::uint32_t k, std::uint64_t seed) {
  if (k < 1 || k > std::max<std::size_t>(n, 1)) throw std::invalid_argument("num_colors must be in [1, n]");
  std::vector<std::uint32_t> c(n);
  for (NodeId v = 0; v < n; ++v) {
    NodeRng rng(seed, v);
    c[v] = draw_color(rng, k);
  }
  return c;
}

/// Class sizes indexed by color; entry 0 is unused.
inline std::vector<std::size_t> class_sizes(const std::vector<std::uint32_t>& colors, std::uint32_t k) {
  std::vector<std::size_t> s(static_cast<std::size_t>(k) + 1, 0);
  for (auto c : colors) ++s[c];
  return s;
}

inline std::uint32_t dhc1_num_colors(std::size_t n) {
  return static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

inline std::uint32_t dhc2_num_colors(std::size_t n, double delta) {
  const double k = std::ceil(std::pow(static_cast<double>(n), 1.0 - delta) - 1e-9);
  return static_cast<std::uint32_t>(std::clamp(k, 1.0, static_cast<double>(std::max<std::size_t>(n, 1))));
}

/// ceil(log2 k): merge levels needed to reduce k cycles to one.
inline std::uint32_t merge_levels(std::uint32_t k) {
  return k <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(k - 1));
}

/// Color after `halvings` applications of c <- ceil(c / 2).
constexpr std::uint32_t halved_color(std::uint32_t c, std::uint32_t halvings) noexcept {
  return halvings >= 32 ? 1 : ((c - 1) >> halvings) + 1;
}

// ---- per-node cycle state ---------------------------------------------------

/// Each node's view of the cycle it belongs to. pred/succ follow the index
/// order: idx(succ v) = idx(v) mod size + 1.
struct CycleState {
  std::vector<std::uint32_t> color;
  std::vector<std::uint32_t> idx;
  std::vector<std::uint32_t> size;
  std::vector<NodeId> pred;
  std::vector<NodeId> succ;

  explicit CycleState(std::size_t n = 0)
      : color(n, 0), idx(n, 0), size(n, 0), pred(n, kNoNode), succ(n, kNoNode) {}
};

/// Harness check that every color class is one cycle of G whose links and
/// indices agree. Returns the first offending color, if any.
inline std::optional<std::uint32_t> find_broken_cycle(const Graph& g, const CycleState& st) {
  const std::size_t n = g.size();
  std::vector<std::vector<NodeId>> members;
  for (NodeId v = 0; v < n; ++v) {
    if (st.color[v] >= members.size()) members.resize(st.color[v] + 1);
    members[st.color[v]].push_back(v);
  }
  for (std::uint32_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    if (m.empty()) continue;
    const std::size_t s = m.size();
    NodeId v = m.front();
    for (std::size_t k = 0; k < s; ++k) {
      const NodeId w = st.succ[v];
      if (w == kNoNode || w >= n || st.color[w] != c || !g.has_edge(v, w) || st.pred[w] != v ||
          st.size[v] != s || st.idx[w] != st.idx[v] % s + 1) {
        return c;
      }
      v = w;
    }
    if (v != m.front()) return c;
    // s hops returning home with consistent indices visits s distinct nodes.
  }
  return std::nullopt;
}

inline HcCertificate certificate_from_state(const CycleState& st) {
  HcCertificate cert(st.succ.size());
  for (NodeId v = 0; v < st.succ.size(); ++v) cert.ends[v] = {st.pred[v], st.succ[v]};
  return cert;
}

// ---- shared Phase 1 ---------------------------------------------------------

/// Leader-chosen value flooded through each scope.
class ScopeValueBroadcast final : public Protocol {
 public:
  ScopeValueBroadcast(std::size_t n, std::vector<NodeId> leader, std::vector<std::uint32_t> range)
      : leader_(std::move(leader)), range_(std::move(range)), value_(n, 0) {}

  void start(Network& net) override {
    for (NodeId v = 0; v < net.size(); ++v)
      if (net.scope_of(v) != kNoScope && leader_[v] == v) net.wake(v);
  }

  void on_round(NodeContext& ctx) override {
    const NodeId v = ctx.id();
    if (leader_[v] == v && value_[v] == 0) {
      value_[v] = static_cast<std::uint32_t>(ctx.rng().below(range_[v])) + 1;
      ctx.charge(1);
      ctx.flood(Message::make(MessageKind::Control, {value_[v] - 1}));
    }
    for (const auto& f : ctx.floods()) {
      value_[v] = f.msg.f[0] + 1;
      ctx.charge(1);
    }
  }

  const std::vector<std::uint32_t>& values() const noexcept { return value_; }

 private:
  std::vector<NodeId> leader_;
  std::vector<std::uint32_t> range_;
  std::vector<std::uint32_t> value_;
};

struct DhcOptions {
  std::uint32_t num_colors = 0;  // 0 selects the algorithm's default
  Budgets budgets{};
  std::ostream* transcript = nullptr;
};

struct MergeLevelStats {
  std::uint32_t level = 0;
  std::uint32_t pairs = 0;          // active cycles with a partner color
  std::uint32_t bridges = 0;        // pairs that found and built a bridge
  std::uint64_t candidates = 0;     // bridge candidates discovered
  std::uint32_t live_cycles = 0;    // after the level
  bool cycles_valid = false;        // every live cycle passed the checker
  std::uint64_t rounds = 0;
};

struct DhcResult {
  SimulationReport report;
  HcCertificate certificate;
  std::uint32_t num_colors = 0;
  std::vector<std::uint32_t> colors;     // initial colors
  std::vector<std::size_t> class_sizes;  // by color, index 0 unused
  std::vector<MergeLevelStats> levels;   // DHC2 only
};

namespace detail {

/// Colors, per-class leader and size, and one rotation cycle per class.
/// Phase labels start with "phase1:".
inline bool run_partition_phase(Network& net, std::uint32_t k, CycleState& st, DhcResult& out,
                                std::vector<NodeId>* leader = nullptr) {
  const Graph& g = net.graph();
  const std::size_t n = g.size();
  out.num_colors = k;
  out.colors.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    out.colors[v] = draw_color(net.rng(v), k);
    net.charge(v, 1);
  }
  st.color = out.colors;
  out.class_sizes = class_sizes(out.colors, k);
  // Every node tells its neighbors its color and keeps a table of them.
  net.announce("phase1:colors", std::vector<bool>(n, true));
  for (NodeId v = 0; v < n; ++v) net.charge(v, g.degree(v));
  for (std::uint32_t c = 1; c <= k; ++c) {
    if (out.class_sizes[c] == 0) {
      net.fail(FailureReason::PartitionDisconnected, "color class " + std::to_string(c) + " is empty");
      return false;
    }
  }
  net.set_scopes(st.color);
  ScopeInfo info = learn_scopes(net, "phase1:setup");
  if (net.failed()) return false;

  RotationProtocol::Setup setup;
  setup.unused.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    std::vector<NodeId> same;
    for (NodeId w : g.neighbors(v))
      if (st.color[w] == st.color[v]) same.push_back(w);
    setup.unused[v] = UnusedEdges(std::move(same));
  }
  setup.partner.assign(n, kNoNode);
  setup.target = info.size;
  setup.leader = info.leader;
  RotationProtocol rot(n, std::move(setup));
  if (!net.run_phase("phase1:dra", rot)) return false;
  for (std::uint32_t c = 1; c <= k; ++c) {
    if (!rot.scope_done(c)) {
      net.fail(FailureReason::UnusedExhausted, "color class " + std::to_string(c) + " did not close");
      return false;
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    st.idx[v] = rot.index(v);
    st.size[v] = info.size[v];
    st.pred[v] = rot.link_in(v);
    st.succ[v] = rot.link_out(v);
  }
  if (leader) *leader = std::move(info.leader);
  return true;
}

}  // namespace detail

// ---- DHC1 -------------------------------------------------------------------

/// One hypernode per subcycle: terminals u (chosen) and v = pred(u).
struct HyperNode {
  NodeId u = kNoNode;
  NodeId v = kNoNode;
};

struct HyperEdge {
  std::uint32_t i = 0;  // hypernode indices, i < j
  std::uint32_t j = 0;
  std::vector<Edge> terminal_pairs;  // (terminal of i, terminal of j) present in G
};

/// Hypernode adjacency: i ~ j iff some terminal of i is adjacent to some
/// terminal of j. Every usable terminal pair is listed.
inline std::vector<HyperEdge> build_hypernode_graph(const Graph& g, const std::vector<HyperNode>& hs) {
  std::vector<std::uint32_t> owner(g.size(), UINT32_MAX);
  for (std::uint32_t i = 0; i < hs.size(); ++i) owner[hs[i].u] = owner[hs[i].v] = i;
  std::vector<std::vector<Edge>> pairs;  // indexed by i * k + j
  const std::size_t k = hs.size();
  std::vector<std::pair<std::uint64_t, Edge>> found;
  for (std::uint32_t i = 0; i < k; ++i) {
    for (NodeId t : {hs[i].u, hs[i].v}) {
      for (NodeId x : g.neighbors(t)) {
        const std::uint32_t j = owner[x];
        if (j == UINT32_MAX || j <= i) continue;
        found.push_back({std::uint64_t{i} * k + j, {t, x}});
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<HyperEdge> out;
  for (const auto& [key, e] : found) {
    const auto i = static_cast<std::uint32_t>(key / k), j = static_cast<std::uint32_t>(key % k);
    if (out.empty() || out.back().i != i || out.back().j != j) out.push_back({i, j, {}});
    out.back().terminal_pairs.push_back(e);
  }
  return out;
}

/// Two-phase algorithm over ceil(sqrt n) color classes. Phase 1 closes a
/// rotation cycle inside every class. Phase 2 cuts each cycle at a random
/// edge (v_i, u_i) and runs the rotation algorithm over the resulting
/// two-terminal hypernodes; the final cycle follows hypernode links where a
/// node has one and subcycle links otherwise.
inline DhcResult dhc1(const Graph& g, std::uint64_t seed, DhcOptions opt = {}) {
  const std::size_t n = g.size();
  Network net(g, seed, opt.budgets);
  net.set_transcript(opt.transcript);
  DhcResult out;
  const std::uint32_t k = opt.num_colors ? opt.num_colors : dhc1_num_colors(n);
  CycleState st(n);
  std::vector<NodeId> leader;
  if (!detail::run_partition_phase(net, k, st, out, &leader)) {
    out.report = net.finish(false);
    return out;
  }
  if (k == 1) {
    out.certificate = certificate_from_state(st);
    out.report = net.finish(check_certificate(g, out.certificate).ok());
    return out;
  }

  // Each class leader picks u_i's index and floods it; v_i = pred(u_i)
  // recognizes itself from the same value.
  ScopeValueBroadcast pick(n, leader, st.size);
  if (!net.run_phase("phase2:pick", pick)) {
    out.report = net.finish(false);
    return out;
  }
  const auto& r = pick.values();
  std::vector<NodeId> partner(n, kNoNode);
  std::vector<HyperNode> hyper(static_cast<std::size_t>(k) + 1);
  std::vector<bool> terminal(n, false);
  for (NodeId v = 0; v < n; ++v) {
    const std::uint32_t s = st.size[v];
    const bool is_u = st.idx[v] == r[v];
    const bool is_v = st.idx[v] % s + 1 == r[v];  // succ(v) is u
    if (is_u) {
      partner[v] = st.pred[v];
      hyper[st.color[v]].u = v;
    }
    if (is_v) {
      partner[v] = st.succ[v];
      hyper[st.color[v]].v = v;
    }
    terminal[v] = is_u || is_v;
  }
  // Terminals announce themselves; each keeps its terminal neighbors from
  // other hypernodes as its unused set.
  net.announce("phase2:terminals", terminal);
  std::vector<std::uint32_t> scope(n, kNoScope);
  RotationProtocol::Setup setup;
  setup.unused.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    if (!terminal[v]) continue;
    scope[v] = 0;
    std::vector<NodeId> ends;
    for (NodeId w : g.neighbors(v))
      if (terminal[w] && st.color[w] != st.color[v]) ends.push_back(w);
    setup.unused[v] = UnusedEdges(std::move(ends));
  }
  net.set_scopes(std::move(scope), FailureReason::HypernodeGraphDisconnected);
  std::vector<NodeId> tleader = elect_leader(net, "phase2:leader");
  if (net.failed()) {
    out.report = net.finish(false);
    return out;
  }
  setup.partner = partner;
  setup.target.assign(n, k);
  setup.leader = std::move(tleader);
  RotationProtocol rot(n, std::move(setup));
  const bool ok = net.run_phase("phase2:dra", rot) && rot.scope_done(0);
  if (!ok) {
    if (!net.failed()) net.fail(FailureReason::UnusedExhausted, "hypernode cycle did not close");
    out.report = net.finish(false);
    return out;
  }
  out.certificate = HcCertificate(n);
  for (NodeId v = 0; v < n; ++v) {
    if (!terminal[v]) {
      out.certificate.ends[v] = {st.pred[v], st.succ[v]};
      continue;
    }
    const NodeId hyperlink = (rot.roles(v) & kEntry) ? rot.link_in(v) : rot.link_out(v);
    const NodeId inner = st.pred[v] == partner[v] ? st.succ[v] : st.pred[v];
    out.certificate.ends[v] = {hyperlink, inner};
  }
  out.report = net.finish(check_certificate(g, out.certificate).ok());
  if (!out.report.success && !out.report.failure_reason) {
    out.report.failure_reason = FailureReason::HypernodeGraphDisconnected;
    out.report.failure_detail = "certificate rejected";
  }
  return out;
}

// ---- DHC2 bridges -----------------------------------------------------------

/// Cycle edge (a, b) of C_i with b = succ(a), cycle edge {w, w2} of C_j, and
/// cross edges (a, w), (b, w2).
struct Bridge {
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  NodeId w = kNoNode;
  NodeId w2 = kNoNode;
  friend bool operator==(const Bridge&, const Bridge&) = default;
};

/// Selection key: both edges by sorted endpoints, then which pairing of
/// endpoints the cross edges use (0: smaller to smaller).
using BridgeKey = std::array<NodeId, 5>;

inline BridgeKey bridge_key(const Bridge& br) noexcept {
  const NodeId type = (br.a < br.b) == (br.w < br.w2) ? 0 : 1;
  return {std::min(br.a, br.b), std::max(br.a, br.b), std::min(br.w, br.w2), std::max(br.w, br.w2), type};
}

/// Every bridge between cycles given in traversal order (brute force).
inline std::vector<Bridge> enumerate_bridges(const Graph& g, const std::vector<NodeId>& ci,
                                             const std::vector<NodeId>& cj) {
  std::vector<Bridge> out;
  const std::size_t si = ci.size(), sj = cj.size();
  for (std::size_t x = 0; x < si; ++x) {
    const NodeId a = ci[x], b = ci[(x + 1) % si];
    for (std::size_t y = 0; y < sj; ++y) {
      const NodeId p = cj[y], q = cj[(y + 1) % sj];
      if (g.has_edge(a, p) && g.has_edge(b, q)) out.push_back({a, b, p, q});
      if (g.has_edge(a, q) && g.has_edge(b, p)) out.push_back({a, b, q, p});
    }
  }
  std::sort(out.begin(), out.end(), [](const Bridge& l, const Bridge& r) { return bridge_key(l) < bridge_key(r); });
  return out;
}

/// New 1-based index in the merged cycle. C_i nodes use anchor = idx(b),
/// offset 0; C_j nodes use anchor = idx(w), offset |C_i|, reversed iff
/// w2 = succ(w).
constexpr std::uint32_t merged_index(std::uint32_t old_idx, std::uint32_t anchor, std::uint32_t offset,
                                     bool reversed, std::uint32_t size) noexcept {
  const std::uint32_t d = reversed ? (anchor + size - old_idx) % size : (old_idx + size - anchor) % size;
  return offset + 1 + d;
}

/// Merged traversal for cycles given in order (index 1 first). Pure form of
/// the renumbering the distributed merge performs.
inline std::vector<NodeId> splice_bridge(const std::vector<NodeId>& ci, const std::vector<NodeId>& cj,
                                         const Bridge& br) {
  const auto si = static_cast<std::uint32_t>(ci.size()), sj = static_cast<std::uint32_t>(cj.size());
  auto pos = [](const std::vector<NodeId>& c, NodeId v) {
    return static_cast<std::uint32_t>(std::find(c.begin(), c.end(), v) - c.begin()) + 1;
  };
  const std::uint32_t ib = pos(ci, br.b), iw = pos(cj, br.w);
  const bool rev = cj[iw % sj] == br.w2;
  std::vector<NodeId> out(si + sj, kNoNode);
  for (std::uint32_t i = 1; i <= si; ++i) out[merged_index(i, ib, 0, false, si) - 1] = ci[i - 1];
  for (std::uint32_t i = 1; i <= sj; ++i) out[merged_index(i, iw, si, rev, sj) - 1] = cj[i - 1];
  return out;
}

namespace detail {

inline constexpr std::uint32_t kCtlMergeSize = 3;

/// Shared view of one merge level.
struct LevelCtx {
  std::uint32_t level = 1;
  std::uint32_t count = 0;  // colors alive at this level
  const std::vector<std::uint32_t>* initial_color = nullptr;

  std::uint32_t color_of(NodeId v) const noexcept { return halved_color((*initial_color)[v], level - 1); }
  bool active(std::uint32_t c) const noexcept { return (c & 1u) && c + 1 <= count; }
};

/// Verify / Query / Verified exchange. Active node v asks every neighbor w
/// of color c+1 whether succ(w) or pred(w) is adjacent to succ(v); each
/// positive answer is a candidate bridge held at v (only the minimum kept).
class BridgeDiscovery final : public Protocol {
 public:
  std::function<void(const Bridge&)> on_candidate;

  BridgeDiscovery(const Graph& g, const CycleState& st, const LevelCtx& lc)
      : g_(&g), st_(&st), lc_(lc), best_(g.size()), sent_(g.size(), 0) {}

  void start(Network& net) override {
    for (NodeId v = 0; v < net.size(); ++v)
      if (lc_.active(st_->color[v])) net.wake(v);
  }

  void on_round(NodeContext& ctx) override {
    const NodeId me = ctx.id();
    const std::uint32_t c = st_->color[me];
    if (lc_.active(c) && !sent_[me]) {
      sent_[me] = 1;
      const Message m = Message::make(MessageKind::Verify, {st_->succ[me]});
      for (NodeId w : ctx.neighbors())
        if (lc_.color_of(w) == c + 1) ctx.send(w, m);
    }
    for (const auto& in : ctx.inbox()) {
      const Message& m = in.msg;
      if (m.kind == MessageKind::Verify) {
        const Message q = Message::make(MessageKind::Query, {m.f[0], in.sender});
        ctx.enqueue(st_->succ[me], q);
        ctx.enqueue(st_->pred[me], q);
      } else if (m.kind == MessageKind::Query) {
        if (ctx.adjacent(m.f[0])) ctx.enqueue(in.sender, Message::make(MessageKind::Verified, {m.f[1]}));
      } else if (m.kind == MessageKind::Verified && m.arity == 1) {
        ctx.enqueue(m.f[0], Message::make(MessageKind::Verified, {me, in.sender}));
      } else if (m.kind == MessageKind::Verified) {
        const Bridge br{me, st_->succ[me], m.f[0], m.f[1]};
        ++candidates_;
        if (on_candidate) on_candidate(br);
        if (!best_[me] || bridge_key(br) < bridge_key(*best_[me])) {
          if (!best_[me]) ctx.charge(4);
          best_[me] = br;
        }
      }
    }
  }

  const std::vector<std::optional<Bridge>>& best() const noexcept { return best_; }
  std::uint64_t candidates() const noexcept { return candidates_; }

 private:
  const Graph* g_;
  const CycleState* st_;
  LevelCtx lc_;
  std::vector<std::optional<Bridge>> best_;
  std::vector<char> sent_;
  std::uint64_t candidates_ = 0;
};

/// Minimum-key flooding of candidates inside each active cycle.
class BridgeSelect final : public Protocol {
 public:
  explicit BridgeSelect(std::vector<std::optional<Bridge>> best)
      : best_(std::move(best)), started_(best_.size(), 0) {}

  void start(Network& net) override {
    for (NodeId v = 0; v < net.size(); ++v)
      if (best_[v]) net.wake(v);
  }

  void on_round(NodeContext& ctx) override {
    const NodeId me = ctx.id();
    bool improved = !started_[me] && best_[me].has_value();  // announce the own candidate once
    started_[me] = 1;
    for (const auto& in : ctx.inbox()) {
      const Bridge br{in.msg.f[0], in.msg.f[1], in.msg.f[2], in.msg.f[3]};
      if (!best_[me] || bridge_key(br) < bridge_key(*best_[me])) {
        if (!best_[me]) ctx.charge(4);
        best_[me] = br;
        improved = true;
      }
    }
    if (!improved) return;
    const Bridge& b = *best_[me];
    const Message m = Message::make(MessageKind::Candidate, {b.a, b.b, b.w, b.w2});
    for (NodeId w : ctx.scope_neighbors()) ctx.send(w, m);
  }

  const std::vector<std::optional<Bridge>>& winners() const noexcept { return best_; }

 private:
  std::vector<std::optional<Bridge>> best_;
  std::vector<char> started_;
};

/// Splices each active cycle with its partner along the selected bridge.
/// a -> w: BuildBridge; w floods Renumber in C_j and acks |C_j| to a; a then
/// floods Renumber in C_i. b and w2 fix their links locally.
class BridgeBuild final : public Protocol {
 public:
  BridgeBuild(CycleState& st, const std::vector<std::optional<Bridge>>& winner)
      : st_(&st),
        winner_(&winner),
        pending_out_(st.succ.size(), kNoNode),
        applied_(st.succ.size(), 0),
        started_(st.succ.size(), 0) {}

  void start(Network& net) override {
    for (NodeId v = 0; v < net.size(); ++v) {
      const auto& b = (*winner_)[v];
      if (b && (b->a == v || b->b == v)) net.wake(v);
    }
  }

  void on_round(NodeContext& ctx) override {
    CycleState& st = *st_;
    const NodeId me = ctx.id();
    const auto& win = (*winner_)[me];
    if (win && !started_[me]) {
      started_[me] = 1;
      const Message m = Message::make(MessageKind::BuildBridge, {st.size[me], win->a, win->b, win->w2});
      if (win->a == me) {
        ctx.send(win->w, m);
        st.succ[me] = win->w;
      }
      if (win->b == me) {
        ctx.send(win->w2, m);
        st.pred[me] = win->w2;
      }
    }
    for (const auto& f : ctx.floods()) apply(me, f.msg);
    for (const auto& in : ctx.inbox()) {
      const Message& m = in.msg;
      if (m.kind == MessageKind::BuildBridge && in.sender == m.f[1]) {
        // This node is w.
        const NodeId w2 = m.f[3];
        const std::uint32_t si = m.f[0], sj = st.size[me];
        const std::uint32_t rev = st.succ[me] == w2 ? 1 : 0;
        const Message r = Message::make(MessageKind::Renumber, {st.idx[me], si, si, rev});
        ctx.flood(r);
        apply(me, r);
        st.pred[me] = in.sender;
        ctx.send(in.sender, Message::make(MessageKind::Control, {kCtlMergeSize, sj}));
      } else if (m.kind == MessageKind::BuildBridge) {
        // This node is w2; its out-link is set once its Renumber arrives.
        if (applied_[me]) st.succ[me] = in.sender;
        else pending_out_[me] = in.sender;
      } else if (m.kind == MessageKind::Control && m.f[0] == kCtlMergeSize) {
        // b = succ(a), so its index is known locally.
        const Message r = Message::make(MessageKind::Renumber, {st.idx[me] % st.size[me] + 1, 0, m.f[1], 0});
        ctx.flood(r);
        apply(me, r);
      }
    }
  }

 private:
  void apply(NodeId v, const Message& r) {
    CycleState& st = *st_;
    const std::uint32_t s = st.size[v];
    st.idx[v] = merged_index(st.idx[v], r.f[0], r.f[1], r.f[3] != 0, s);
    st.size[v] = s + r.f[2];
    if (r.f[3]) std::swap(st.pred[v], st.succ[v]);
    applied_[v] = 1;
    if (pending_out_[v] != kNoNode) {
      st.succ[v] = pending_out_[v];
      pending_out_[v] = kNoNode;
    }
  }

  CycleState* st_;
  const std::vector<std::optional<Bridge>>* winner_;
  std::vector<NodeId> pending_out_;
  std::vector<char> applied_;
  std::vector<char> started_;
};

}  // namespace detail

/// Observer hooks for a DHC2 run.
struct Dhc2Hooks {
  /// Before level L's merge: state, and the level's color count.
  std::function<void(std::uint32_t level, const CycleState&, std::uint32_t count)> before_level;
  std::function<void(std::uint32_t level, const Bridge&)> on_candidate;
  /// Winner per active color after selection, as held by the cycle's nodes.
  std::function<void(std::uint32_t level, std::uint32_t color, const Bridge&)> on_winner;
};

/// Phase 1 over ceil(n^(1-delta)) classes, then ceil(log2 k) merge levels.
/// At each level cycle 2t-1 merges with cycle 2t along the minimum-key
/// bridge and every node halves its color.
inline DhcResult dhc2(const Graph& g, std::uint64_t seed, double delta, DhcOptions opt = {},
                      const Dhc2Hooks& hooks = {}) {
  const std::size_t n = g.size();
  Network net(g, seed, opt.budgets);
  net.set_transcript(opt.transcript);
  DhcResult out;
  const std::uint32_t k = opt.num_colors ? opt.num_colors : dhc2_num_colors(n, delta);
  CycleState st(n);
  if (!detail::run_partition_phase(net, k, st, out)) {
    out.report = net.finish(false);
    return out;
  }
  for (NodeId v = 0; v < n; ++v) net.charge(v, 6);  // color, idx, size, pred, succ, winner flag

  const std::uint32_t levels = merge_levels(k);
  for (std::uint32_t level = 1; level <= levels; ++level) {
    detail::LevelCtx lc;
    lc.level = level;
    lc.count = halved_color(k, level - 1);
    lc.initial_color = &out.colors;
    if (hooks.before_level) hooks.before_level(level, st, lc.count);
    const std::uint64_t rounds_before = net.report().rounds;
    MergeLevelStats stats;
    stats.level = level;
    for (std::uint32_t c = 1; c <= lc.count; ++c) stats.pairs += lc.active(c) ? 1 : 0;

    const std::string tag = "phase2:L" + std::to_string(level);
    detail::BridgeDiscovery disc(g, st, lc);
    if (hooks.on_candidate) disc.on_candidate = [&](const Bridge& b) { hooks.on_candidate(level, b); };
    if (!net.run_phase(tag + ":discover", disc)) break;
    stats.candidates = disc.candidates();

    detail::BridgeSelect sel(disc.best());
    if (!net.run_phase(tag + ":select", sel)) break;
    // An active cycle none of whose nodes holds a candidate has no bridge.
    std::vector<char> has_winner(static_cast<std::size_t>(lc.count) + 1, 0);
    for (NodeId v = 0; v < n; ++v) {
      if (sel.winners()[v] && lc.active(st.color[v]) && !has_winner[st.color[v]]) {
        has_winner[st.color[v]] = 1;
        if (hooks.on_winner) hooks.on_winner(level, st.color[v], *sel.winners()[v]);
      }
    }
    for (std::uint32_t c = 1; c <= lc.count; ++c) {
      if (lc.active(c) && !has_winner[c]) {
        net.fail(FailureReason::NoBridgeFound,
                 "level " + std::to_string(level) + " colors " + std::to_string(c) + "," + std::to_string(c + 1));
        break;
      }
    }
    if (net.failed()) break;

    detail::BridgeBuild build(st, sel.winners());
    if (!net.run_phase(tag + ":bridge", build)) break;
    stats.bridges = stats.pairs;

    for (NodeId v = 0; v < n; ++v) st.color[v] = halved_color(st.color[v], 1);
    net.set_scopes(st.color);
    stats.live_cycles = halved_color(k, level);
    stats.cycles_valid = !find_broken_cycle(g, st).has_value();
    stats.rounds = net.report().rounds - rounds_before;
    out.levels.push_back(stats);
    if (!stats.cycles_valid) {
      net.fail(FailureReason::NoBridgeFound, "level " + std::to_string(level) + " produced a broken cycle");
      break;
    }
  }
  if (net.failed()) {
    out.report = net.finish(false);
    return out;
  }
  out.certificate = certificate_from_state(st);
  out.report = net.finish(check_certificate(g, out.certificate).ok());
  return out;
}

}  // namespace hcdist

#endif  // HCDIST_DHC_HPP
