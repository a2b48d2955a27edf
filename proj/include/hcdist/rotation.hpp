#ifndef HCDIST_ROTATION_HPP
#define HCDIST_ROTATION_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcdist/graph.hpp"
#include "hcdist/primitives.hpp"
#include "hcdist/rng.hpp"
#include "hcdist/runtime.hpp"
#include "hcdist/verify.hpp"

namespace hcdist {

/// Index remap of a rotation with head index h hitting index j: positions
/// j+1..h are reversed, all others fixed. An involution on [j+1, h].
constexpr std::uint32_t rotate_index(std::uint32_t i, std::uint32_t h, std::uint32_t j) noexcept {
  return (j < i && i <= h) ? h + j + 1 - i : i;
}

/// A node's not-yet-drawn incident edges, identified by the far endpoint.
/// Draws swap the chosen slot with the last one, so the order (and thus the
/// draw sequence) depends only on the operation history.
class UnusedEdges {
 public:
  UnusedEdges() = default;
  explicit UnusedEdges(std::vector<NodeId> ends) : e_(std::move(ends)) {}

  NodeId draw(NodeRng& rng) {
    const std::size_t k = static_cast<std::size_t>(rng.below(e_.size()));
    const NodeId v = e_[k];
    e_[k] = e_.back();
    e_.pop_back();
    return v;
  }

  bool remove(NodeId v) {
    auto it = std::find(e_.begin(), e_.end(), v);
    if (it == e_.end()) return false;
    *it = e_.back();
    e_.pop_back();
    return true;
  }

  bool contains(NodeId v) const { return std::find(e_.begin(), e_.end(), v) != e_.end(); }
  std::size_t size() const noexcept { return e_.size(); }
  bool empty() const noexcept { return e_.empty(); }
  std::span<const NodeId> items() const noexcept { return e_; }

 private:
  std::vector<NodeId> e_;
};

inline constexpr std::uint8_t kEntry = 1;
inline constexpr std::uint8_t kExit = 2;

// Control message subtypes used by the rotation protocol.
inline constexpr std::uint32_t kCtlRetry = 1;
inline constexpr std::uint32_t kCtlBecomeHead = 2;

enum class RotationEventKind : std::uint8_t { Extend, Rotate, Retry, Close };

struct RotationEvent {
  RotationEventKind kind;
  std::uint32_t scope;
  NodeId head;    // node that drew the edge
  NodeId target;  // far endpoint of the drawn edge
  std::uint32_t h;
  std::uint32_t j;
};

/// Distributed rotation algorithm over every scope of the network at once.
///
/// A path element is either a single node (entry and exit roles together)
/// or a two-terminal gadget: a pair of adjacent partner nodes, one entry and
/// one exit. The head element's exit terminal draws a random unused edge and
/// sends Progress(pos). The receiver either joins as the new head, closes
/// the cycle at the tail, floods Rotation(h, j) if it is an exit terminal,
/// or answers Retry if it is an entry terminal. Every node maintains its
/// own path index and its in/out links, so the cycle is known locally.
class RotationProtocol final : public Protocol {
 public:
  struct Setup {
    std::vector<UnusedEdges> unused;     // per node; scope-internal ends
    std::vector<NodeId> partner;         // gadget partner or kNoNode
    std::vector<std::uint32_t> target;   // |V| of the instance the node is in
    std::vector<NodeId> leader;          // min-id node of the scope; exit of element 1
  };

  std::function<void(const RotationProtocol&, NodeId head)> before_draw;
  std::function<void(const RotationProtocol&, const RotationEvent&)> on_event;

  RotationProtocol(std::size_t n, Setup setup)
      : unused_(std::move(setup.unused)),
        partner_(std::move(setup.partner)),
        target_(std::move(setup.target)),
        leader_(std::move(setup.leader)),
        index_(n, 0),
        roles_(n, 0),
        in_(n, kNoNode),
        out_(n, kNoNode),
        head_(n, 0),
        act_at_(n, kNever) {}

  void start(Network& net) override {
    mult_ = net.step_mult();
    for (NodeId v = 0; v < net.size(); ++v) {
      const std::uint32_t s = net.scope_of(v);
      if (s == kNoScope) continue;
      net.charge(v, unused_[v].size() + 6);
      if (s >= done_.size()) done_.resize(s + 1, 0);
      if (leader_[v] != v) continue;
      index_[v] = 1;
      head_[v] = 1;
      act_at_[v] = 0;
      if (partner_[v] == kNoNode) {
        roles_[v] = kEntry | kExit;
      } else {
        roles_[v] = kExit;
        index_[partner_[v]] = 1;
        roles_[partner_[v]] = kEntry;
      }
      net.wake(v);
    }
  }

  void on_round(NodeContext& ctx) override {
    const NodeId v = ctx.id();
    for (const auto& f : ctx.floods()) {
      if (f.msg.kind == MessageKind::Rotation) apply_rotation(ctx, f.msg.f[0] + 1, f.msg.f[1], f.origin, f.ready_round);
    }
    for (const auto& in : ctx.inbox()) {
      if (in.msg.kind == MessageKind::Progress) {
        on_progress(ctx, in.sender, in.msg.f[0] + 1);
      } else if (in.msg.kind == MessageKind::Control && in.msg.f[0] == kCtlRetry) {
        out_[v] = kNoNode;
        act_at_[v] = ctx.round();
      } else if (in.msg.kind == MessageKind::Control && in.msg.f[0] == kCtlBecomeHead) {
        index_[v] = in.msg.f[1] + 1;
        roles_[v] = kExit;
        out_[v] = kNoNode;
        head_[v] = 1;
        act_at_[v] = ctx.round();
      }
    }
    if (head_[v] && act_at_[v] <= ctx.round()) act(ctx);
  }

  // ---- state views ----------------------------------------------------------

  std::uint32_t index(NodeId v) const noexcept { return index_[v]; }
  std::uint8_t roles(NodeId v) const noexcept { return roles_[v]; }
  NodeId link_in(NodeId v) const noexcept { return in_[v]; }
  NodeId link_out(NodeId v) const noexcept { return out_[v]; }
  bool is_head(NodeId v) const noexcept { return head_[v] != 0; }
  NodeId partner(NodeId v) const noexcept { return partner_[v]; }
  const UnusedEdges& unused(NodeId v) const noexcept { return unused_[v]; }
  std::uint32_t target(NodeId v) const noexcept { return target_[v]; }
  bool scope_done(std::uint32_t label) const noexcept { return label < done_.size() && done_[label]; }

  const std::vector<std::uint32_t>& indices() const noexcept { return index_; }
  const std::vector<NodeId>& links_in() const noexcept { return in_; }
  const std::vector<NodeId>& links_out() const noexcept { return out_; }

 private:
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

  void emit(RotationEventKind k, std::uint32_t scope, NodeId head, NodeId target, std::uint32_t h, std::uint32_t j) {
    if (on_event) on_event(*this, RotationEvent{k, scope, head, target, h, j});
  }

  void act(NodeContext& ctx) {
    const NodeId v = ctx.id();
    act_at_[v] = kNever;
    const std::uint32_t s = ctx.scope();
    if (done_[s]) return;
    if (unused_[v].empty()) {
      ctx.fail(FailureReason::UnusedExhausted, "scope " + std::to_string(s) + " head " + std::to_string(v));
      return;
    }
    if (!ctx.count_step(s, step_budget(target_[v], mult_))) {
      ctx.fail(FailureReason::StepBudgetExceeded, "scope " + std::to_string(s));
      return;
    }
    if (before_draw) before_draw(*this, v);
    const NodeId u = unused_[v].draw(ctx.rng());
    ctx.release(1);
    out_[v] = u;  // tentative; corrected by rotation or retry
    ctx.send(u, Message::make(MessageKind::Progress, {index_[v] - 1}));
  }

  void on_progress(NodeContext& ctx, NodeId x, std::uint32_t pos) {
    const NodeId y = ctx.id();
    const std::uint32_t s = ctx.scope();
    const std::uint32_t j = index_[y];
    RotationEventKind kind = RotationEventKind::Retry;
    if (j == 0) kind = RotationEventKind::Extend;
    else if (j == 1 && (roles_[y] & kEntry) && pos == target_[y]) kind = RotationEventKind::Close;
    else if (roles_[y] & kExit) kind = RotationEventKind::Rotate;
    // Observers see the state as of the draw; every earlier rotation has
    // been applied everywhere by now.
    emit(kind, s, x, y, pos, j);
    if (unused_[y].remove(x)) ctx.release(1);
    switch (kind) {
      case RotationEventKind::Extend:
        index_[y] = pos + 1;
        in_[y] = x;
        if (partner_[y] == kNoNode) {
          roles_[y] = kEntry | kExit;
          head_[y] = 1;
          act_at_[y] = ctx.round();
        } else {
          roles_[y] = kEntry;
          ctx.send(partner_[y], Message::make(MessageKind::Control, {kCtlBecomeHead, pos}));
        }
        break;
      case RotationEventKind::Close:
        in_[y] = x;
        done_[s] = 1;
        break;
      case RotationEventKind::Rotate:
        out_[y] = x;
        ctx.flood(Message::make(MessageKind::Rotation, {pos - 1, j}));
        break;
      case RotationEventKind::Retry:
        ctx.send(x, Message::make(MessageKind::Control, {kCtlRetry}));
        break;
    }
  }

  void apply_rotation(NodeContext& ctx, std::uint32_t h, std::uint32_t j, NodeId origin, std::uint64_t ready) {
    const NodeId z = ctx.id();
    const std::uint32_t i = index_[z];
    if (!(j < i && i <= h)) return;
    index_[z] = rotate_index(i, h, j);
    std::swap(in_[z], out_[z]);
    if (roles_[z] != (kEntry | kExit)) roles_[z] ^= (kEntry | kExit);
    head_[z] = 0;
    if (i == h && (roles_[z] & kEntry)) in_[z] = origin;
    if (i == j + 1 && (roles_[z] & kExit)) {
      out_[z] = kNoNode;
      head_[z] = 1;
      act_at_[z] = ready;
      ctx.wake_at(ready);
    }
  }

  std::vector<UnusedEdges> unused_;
  std::vector<NodeId> partner_;
  std::vector<std::uint32_t> target_;
  std::vector<NodeId> leader_;
  std::vector<std::uint32_t> index_;
  std::vector<std::uint8_t> roles_;
  std::vector<NodeId> in_;
  std::vector<NodeId> out_;
  std::vector<char> head_;
  std::vector<std::uint64_t> act_at_;
  std::vector<char> done_;
  double mult_ = 1.0;
};

/// Nodes of one scope ordered by path index; empty slots are kNoNode.
/// Gadget partners share an index, so only exit terminals are listed.
inline std::vector<NodeId> path_snapshot(const RotationProtocol& p, std::span<const NodeId> members) {
  std::uint32_t h = 0;
  for (NodeId v : members) h = std::max(h, p.index(v));
  std::vector<NodeId> path(h, kNoNode);
  for (NodeId v : members) {
    const std::uint32_t i = p.index(v);
    if (i == 0) continue;
    if (p.partner(v) != kNoNode && !(p.roles(v) & kExit)) continue;
    if (path[i - 1] != kNoNode) return {};  // duplicate index
    path[i - 1] = v;
  }
  return path;
}

struct DraResult {
  SimulationReport report;
  HcCertificate certificate;
};

/// Runs leader election, size convergecast and the rotation algorithm on
/// the whole graph as one scope.
inline DraResult run_dra(const Graph& g, std::uint64_t seed, Budgets budgets = {},
                         const std::function<void(RotationProtocol&)>& instrument = {},
                         std::ostream* transcript = nullptr) {
  Network net(g, seed, budgets);
  net.set_transcript(transcript);
  DraResult out;
  ScopeInfo info = learn_scopes(net, "setup");
  if (!net.failed()) {
    RotationProtocol::Setup setup;
    setup.unused.resize(g.size());
    for (NodeId v = 0; v < g.size(); ++v) {
      auto nb = g.neighbors(v);
      setup.unused[v] = UnusedEdges({nb.begin(), nb.end()});
    }
    setup.partner.assign(g.size(), kNoNode);
    setup.target = info.size;
    setup.leader = info.leader;
    RotationProtocol rot(g.size(), std::move(setup));
    if (instrument) instrument(rot);
    const bool ok = net.run_phase("dra", rot) && rot.scope_done(0);
    if (ok) {
      out.certificate = HcCertificate(g.size());
      for (NodeId v = 0; v < g.size(); ++v) out.certificate.ends[v] = {rot.link_in(v), rot.link_out(v)};
    }
    out.report = net.finish(ok);
    return out;
  }
  out.report = net.finish(false);
  return out;
}

struct SequentialResult {
  bool success = false;
  std::vector<NodeId> cycle;  // path order; closes from back() to front()
  std::uint64_t steps = 0;
  std::optional<FailureReason> failure;
};

/// Centralized rotation algorithm. Node v draws from NodeRng(seed, v), so on
/// the same graph it follows the distributed run draw for draw.
inline SequentialResult sequential_rotation_solve(const Graph& g, std::uint64_t seed, std::uint64_t max_steps = 0,
                                                  const std::function<void(const std::vector<NodeId>&)>& after_step = {}) {
  const std::size_t n = g.size();
  SequentialResult r;
  if (n == 0) return r;
  if (max_steps == 0) max_steps = step_budget(n);
  std::vector<UnusedEdges> unused(n);
  std::vector<NodeRng> rng;
  rng.reserve(n);
  for (NodeId v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    unused[v] = UnusedEdges({nb.begin(), nb.end()});
    rng.emplace_back(seed, v);
  }
  std::vector<std::uint32_t> pos(n, 0);
  std::vector<NodeId> path{0};
  pos[0] = 1;
  for (;;) {
    const NodeId head = path.back();
    if (unused[head].empty()) {
      r.failure = FailureReason::UnusedExhausted;
      break;
    }
    if (r.steps >= max_steps) {
      r.failure = FailureReason::StepBudgetExceeded;
      break;
    }
    ++r.steps;
    const NodeId u = unused[head].draw(rng[head]);
    unused[u].remove(head);
    if (pos[u] == 0) {
      path.push_back(u);
      pos[u] = static_cast<std::uint32_t>(path.size());
    } else if (pos[u] == 1 && path.size() == n) {
      r.success = true;
      break;
    } else {
      const std::uint32_t j = pos[u];
      std::reverse(path.begin() + j, path.end());
      for (std::size_t k = j; k < path.size(); ++k) pos[path[k]] = static_cast<std::uint32_t>(k + 1);
    }
    if (after_step) after_step(path);
  }
  r.cycle = std::move(path);
  return r;
}

}  // namespace hcdist

#endif  // HCDIST_ROTATION_HPP
