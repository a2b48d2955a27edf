#ifndef HCDIST_PRIMITIVES_HPP
#define HCDIST_PRIMITIVES_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hcdist/runtime.hpp"

namespace hcdist {

/// Min-id flooding inside each scope. Every node re-sends its best known id
/// to all scope neighbors whenever it improves, so a scope of eccentricity e
/// around its minimum goes quiet after e + 1 rounds.
class LeaderElection final : public Protocol {
 public:
  explicit LeaderElection(std::size_t n) : best_(n, kNoNode) {}

  void start(Network& net) override {
    for (NodeId v = 0; v < net.size(); ++v) {
      if (net.scope_of(v) != kNoScope) {
        net.wake(v);
        net.charge(v, 1);
      }
    }
  }

  void on_round(NodeContext& ctx) override {
    const NodeId v = ctx.id();
    bool improved = false;
    if (best_[v] == kNoNode) {
      best_[v] = v;
      improved = true;
    }
    for (const auto& in : ctx.inbox()) {
      if (in.msg.kind == MessageKind::LeaderProbe && in.msg.f[0] < best_[v]) {
        best_[v] = in.msg.f[0];
        improved = true;
      }
    }
    if (!improved) return;
    const Message m = Message::make(MessageKind::LeaderProbe, {best_[v]});
    for (NodeId w : ctx.scope_neighbors()) ctx.send(w, m);
  }

  const std::vector<NodeId>& leaders() const noexcept { return best_; }

 private:
  std::vector<NodeId> best_;
};

inline std::vector<NodeId> elect_leader(Network& net, const std::string& label) {
  LeaderElection le(net.size());
  net.run_phase(label, le);
  return le.leaders();
}

enum class ParentRule : std::uint8_t { MinId, Random };

struct TreeChild {
  NodeId id;
  std::uint32_t size;
};

/// Echo-style BFS tree plus convergecast of subtree size and height.
///
/// Each node sends every scope neighbor exactly one message: BfsExplore to
/// all but its parent, then SizeReport(count, height) to the parent once it
/// has heard from every neighbor. A root optionally floods the final size.
class EchoTree final : public Protocol {
 public:
  struct Options {
    ParentRule rule = ParentRule::MinId;
    bool flood_size = true;
    bool keep_children = false;
  };

  EchoTree(std::size_t n, std::vector<char> is_root, Options opt)
      : opt_(opt),
        root_(std::move(is_root)),
        parent_(n, kNoNode),
        level_(n, 0),
        heard_(n, 0),
        count_(n, 1),
        height_(n, 0),
        reached_(n, 0),
        reported_(n, 0),
        scope_size_(n, 0),
        root_done_round_(n, 0),
        children_(opt.keep_children ? n : 0) {}

  void start(Network& net) override {
    start_round_ = net.now();
    for (NodeId v = 0; v < net.size(); ++v) {
      if (net.scope_of(v) == kNoScope) continue;
      net.charge(v, 5);
      if (root_[v]) net.wake(v);
    }
  }

  void on_round(NodeContext& ctx) override {
    const NodeId v = ctx.id();
    const auto nb = ctx.scope_neighbors();
    if (root_[v] && !reached_[v]) {
      reached_[v] = 1;
      const Message m = Message::make(MessageKind::BfsExplore, {0});
      for (NodeId w : nb) ctx.send(w, m);
    }
    // Senders of this round's explores, ascending; candidates for parent.
    std::vector<NodeId> senders;
    std::uint32_t sender_level = 0;
    for (const auto& in : ctx.inbox()) {
      if (in.msg.kind == MessageKind::BfsExplore) {
        ++heard_[v];
        if (!reached_[v]) {
          senders.push_back(in.sender);
          sender_level = in.msg.f[0];
        }
      } else if (in.msg.kind == MessageKind::SizeReport) {
        ++heard_[v];
        count_[v] += in.msg.f[0] + 1;
        height_[v] = std::max(height_[v], in.msg.f[1] + 1);
        if (opt_.keep_children) {
          children_[v].push_back({in.sender, in.msg.f[0] + 1});
          ctx.charge(2);
        }
      }
    }
    if (!reached_[v] && !senders.empty()) {
      reached_[v] = 1;
      parent_[v] = opt_.rule == ParentRule::MinId
                       ? senders.front()
                       : senders[static_cast<std::size_t>(ctx.rng().below(senders.size()))];
      level_[v] = sender_level + 1;
      const Message m = Message::make(MessageKind::BfsExplore, {level_[v]});
      for (NodeId w : nb)
        if (w != parent_[v]) ctx.send(w, m);
    }
    for (const auto& f : ctx.floods()) {
      if (f.msg.kind == MessageKind::SizeReport) scope_size_[v] = f.msg.f[0] + 1;
    }
    if (reached_[v] && !reported_[v] && heard_[v] == nb.size()) {
      reported_[v] = 1;
      if (root_[v]) {
        scope_size_[v] = count_[v];
        root_done_round_[v] = ctx.round() - start_round_ - 1;
        if (opt_.flood_size) ctx.flood(Message::make(MessageKind::SizeReport, {count_[v] - 1}));
      } else {
        ctx.send(parent_[v], Message::make(MessageKind::SizeReport, {count_[v] - 1, height_[v]}));
      }
    }
  }

  const std::vector<NodeId>& parent() const noexcept { return parent_; }
  const std::vector<std::uint32_t>& level() const noexcept { return level_; }
  const std::vector<std::uint32_t>& subtree_size() const noexcept { return count_; }
  const std::vector<std::uint32_t>& height() const noexcept { return height_; }
  const std::vector<std::uint32_t>& scope_size() const noexcept { return scope_size_; }
  const std::vector<char>& reached() const noexcept { return reached_; }
  const std::vector<std::vector<TreeChild>>& children() const noexcept { return children_; }
  /// Communication rounds spent before the root knew its scope's size.
  std::uint64_t root_done_round(NodeId root) const noexcept { return root_done_round_[root]; }

 private:
  Options opt_;
  std::vector<char> root_;
  std::vector<NodeId> parent_;
  std::vector<std::uint32_t> level_;
  std::vector<std::uint32_t> heard_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> height_;
  std::vector<char> reached_;
  std::vector<char> reported_;
  std::vector<std::uint32_t> scope_size_;
  std::vector<std::uint64_t> root_done_round_;
  std::vector<std::vector<TreeChild>> children_;
  std::uint64_t start_round_ = 0;
};

/// Leader election followed by an echo convergecast of the scope size.
struct ScopeInfo {
  std::vector<NodeId> leader;
  std::vector<std::uint32_t> size;
  std::vector<NodeId> parent;
};

inline ScopeInfo learn_scopes(Network& net, const std::string& label_prefix) {
  ScopeInfo info;
  info.leader = elect_leader(net, label_prefix + ":leader");
  if (net.failed()) return info;
  std::vector<char> roots(net.size(), 0);
  for (NodeId v = 0; v < net.size(); ++v) roots[v] = info.leader[v] == v;
  EchoTree tree(net.size(), std::move(roots), {ParentRule::MinId, true, false});
  net.run_phase(label_prefix + ":size", tree);
  info.size = tree.scope_size();
  info.parent = tree.parent();
  return info;
}

}  // namespace hcdist

#endif  // HCDIST_PRIMITIVES_HPP
