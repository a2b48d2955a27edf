#ifndef HCDIST_UPCAST_HPP
#define HCDIST_UPCAST_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hcdist/graph.hpp"
#include "hcdist/primitives.hpp"
#include "hcdist/rng.hpp"
#include "hcdist/rotation.hpp"
#include "hcdist/runtime.hpp"
#include "hcdist/verify.hpp"

namespace hcdist {

/// min(ceil(c' ln n), degree): edges one node samples.
inline std::uint32_t sample_count(std::size_t n, double cprime, std::size_t degree) {
  const double want = std::ceil(cprime * std::log(static_cast<double>(std::max<std::size_t>(n, 2))));
  return static_cast<std::uint32_t>(std::min<double>(want, static_cast<double>(degree)));
}

/// Floyd's algorithm: k distinct indices of [0, m), in draw order.
inline std::vector<std::uint32_t> sample_indices(NodeRng& rng, std::uint32_t m, std::uint32_t k) {
  std::vector<std::uint32_t> out;
  out.reserve(k);
  for (std::uint32_t j = m - k; j < m; ++j) {
    const auto t = static_cast<std::uint32_t>(rng.below(std::uint64_t{j} + 1));
    out.push_back(std::find(out.begin(), out.end(), t) == out.end() ? t : j);
  }
  return out;
}

struct BfsTree {
  NodeId root = kNoNode;
  std::vector<NodeId> parent;
  std::vector<std::uint32_t> level;
  std::vector<std::uint32_t> subtree_size;
  std::vector<std::uint32_t> label;  // DFS preorder; subtree of v is [label, label + size)
  std::uint32_t depth = 0;
};

struct UpcastOptions {
  double cprime = 3.0;
  ParentRule parent_rule = ParentRule::Random;
  Budgets budgets{};
  std::ostream* transcript = nullptr;
};

struct UpcastResult {
  SimulationReport report;
  HcCertificate certificate;
  BfsTree tree;
  std::vector<std::uint32_t> samples;   // per node; 0 at the root
  std::uint64_t records_sent = 0;        // sum of samples
  std::uint64_t records_received = 0;    // EdgeRecords that reached the root
  std::uint64_t records_distinct = 0;    // after dedup at the root
  std::vector<Edge> sampled_edges;       // the root's deduplicated sample
  std::vector<std::pair<NodeId, std::uint64_t>> child_loads;  // records relayed by each root child
  std::uint64_t upcast_rounds = 0;
  std::uint64_t downcast_rounds = 0;
  std::uint64_t solve_steps = 0;
  double solve_ms = 0;
};

namespace detail {

/// Preorder labels pushed down the tree: a node with label l gives its
/// children, in id order, consecutive intervals starting at l + 1.
class DfsLabels final : public Protocol {
 public:
  DfsLabels(NodeId root, std::vector<std::vector<TreeChild>> children)
      : root_(root), children_(std::move(children)), label_(children_.size(), 0), has_(children_.size(), 0) {
    for (auto& c : children_) std::sort(c.begin(), c.end(), [](const TreeChild& a, const TreeChild& b) { return a.id < b.id; });
  }

  void start(Network& net) override {
    for (NodeId v = 0; v < net.size(); ++v) net.charge(v, 1);
    net.wake(root_);
  }

  void on_round(NodeContext& ctx) override {
    const NodeId me = ctx.id();
    if (me == root_ && !has_[me]) has_[me] = 1;
    for (const auto& in : ctx.inbox()) {
      if (in.msg.kind == MessageKind::Control) {
        label_[me] = in.msg.f[0];
        has_[me] = 1;
      }
    }
    if (!has_[me]) return;
    std::uint32_t next = label_[me] + 1;
    for (const auto& c : children_[me]) {
      ctx.send(c.id, Message::make(MessageKind::Control, {next}));
      next += c.size;
    }
  }

  const std::vector<std::uint32_t>& labels() const noexcept { return label_; }
  const std::vector<std::vector<TreeChild>>& children() const noexcept { return children_; }

 private:
  NodeId root_;
  std::vector<std::vector<TreeChild>> children_;
  std::vector<std::uint32_t> label_;
  std::vector<char> has_;
};

/// Every non-root node samples its edges and queues EdgeRecord(u, v)
/// toward the root; its first record also carries label_u. Relays forward
/// children's records unchanged.
class Gather final : public Protocol {
 public:
  Gather(const BfsTree& tree, double cprime)
      : tree_(&tree),
        cprime_(cprime),
        sampled_(tree.parent.size(), 0),
        samples_(tree.parent.size(), 0),
        relayed_(tree.parent.size(), 0),
        known_label_(tree.parent.size(), kNoNode) {}

  void start(Network& net) override {
    net.charge(tree_->root, net.size());  // label table
    for (NodeId v = 0; v < net.size(); ++v)
      if (v != tree_->root) net.wake(v);
  }

  void on_round(NodeContext& ctx) override {
    const NodeId me = ctx.id();
    const NodeId up = tree_->parent[me];
    if (me != tree_->root && !sampled_[me]) {
      sampled_[me] = 1;
      auto nb = ctx.neighbors();
      const std::uint32_t k = sample_count(ctx.network_size(), cprime_, nb.size());
      ctx.charge(k);
      bool first = true;
      for (std::uint32_t i : sample_indices(ctx.rng(), static_cast<std::uint32_t>(nb.size()), k)) {
        ctx.enqueue(up, first ? Message::make(MessageKind::EdgeRecord, {me, nb[i], tree_->label[me]})
                              : Message::make(MessageKind::EdgeRecord, {me, nb[i]}));
        first = false;
      }
      ctx.release(k);
      samples_[me] = k;
    }
    for (const auto& in : ctx.inbox()) {
      if (in.msg.kind != MessageKind::EdgeRecord) continue;
      if (me != tree_->root) {
        ctx.enqueue(up, in.msg);
        ++relayed_[me];
        continue;
      }
      ++received_;
      const NodeId u = in.msg.f[0], v = in.msg.f[1];
      if (in.msg.arity == 3) known_label_[u] = in.msg.f[2];
      const std::uint64_t key = std::uint64_t{std::min(u, v)} << 32 | std::max(u, v);
      if (edges_.insert(key).second) ctx.charge(2);
    }
  }

  const std::vector<std::uint32_t>& samples() const noexcept { return samples_; }
  const std::vector<std::uint64_t>& relayed() const noexcept { return relayed_; }
  std::uint64_t received() const noexcept { return received_; }
  /// Labels the root learned from records; kNoNode where none arrived.
  const std::vector<NodeId>& known_labels() const noexcept { return known_label_; }

  /// The root's deduplicated sample as a graph.
  Graph sampled_graph(std::size_t n) const {
    std::vector<Edge> e;
    e.reserve(edges_.size());
    for (std::uint64_t k : edges_) e.emplace_back(static_cast<NodeId>(k >> 32), static_cast<NodeId>(k & 0xffffffffu));
    return Graph::from_edges(n, e);
  }
  std::size_t distinct() const noexcept { return edges_.size(); }

 private:
  const BfsTree* tree_;
  double cprime_;
  std::vector<char> sampled_;
  std::vector<std::uint32_t> samples_;
  std::vector<std::uint64_t> relayed_;
  std::vector<NodeId> known_label_;
  std::unordered_set<std::uint64_t> edges_;
  std::uint64_t received_ = 0;
};

/// Routes HcAssign(label, pred, succ) from the root to each node along the
/// children's label intervals.
class Downcast final : public Protocol {
 public:
  Downcast(const BfsTree& tree, const std::vector<std::vector<TreeChild>>& children,
           std::vector<std::pair<NodeId, NodeId>> root_plan, std::vector<NodeId> by_label)
      : tree_(&tree),
        children_(&children),
        plan_(std::move(root_plan)),
        by_label_(std::move(by_label)),
        ends_(tree.parent.size(), {kNoNode, kNoNode}) {}

  void start(Network& net) override { net.wake(tree_->root); }

  void on_round(NodeContext& ctx) override {
    const NodeId me = ctx.id();
    if (me == tree_->root && !started_) {
      started_ = true;
      ends_[me] = plan_[me];
      ctx.charge(2);
      for (std::uint32_t l = 1; l < by_label_.size(); ++l) {
        const NodeId u = by_label_[l];
        route(ctx, Message::make(MessageKind::HcAssign, {l, plan_[u].first, plan_[u].second}));
      }
    }
    for (const auto& in : ctx.inbox()) {
      if (in.msg.kind != MessageKind::HcAssign) continue;
      if (in.msg.f[0] == tree_->label[me]) {
        ends_[me] = {in.msg.f[1], in.msg.f[2]};
        ctx.charge(2);
      } else {
        route(ctx, in.msg);
      }
    }
  }

  const std::vector<std::pair<NodeId, NodeId>>& ends() const noexcept { return ends_; }

 private:
  void route(NodeContext& ctx, const Message& m) {
    const NodeId me = ctx.id();
    std::uint32_t start = tree_->label[me] + 1;
    for (const auto& c : (*children_)[me]) {
      if (m.f[0] < start + c.size) {
        ctx.enqueue(c.id, m);
        return;
      }
      start += c.size;
    }
    throw std::logic_error("downcast label outside the subtree");
  }

  const BfsTree* tree_;
  const std::vector<std::vector<TreeChild>>* children_;
  std::vector<std::pair<NodeId, NodeId>> plan_;
  std::vector<NodeId> by_label_;
  std::vector<std::pair<NodeId, NodeId>> ends_;
  bool started_ = false;
};

}  // namespace detail

/// Leader election, BFS tree with subtree sizes, DFS labels, sampled-edge
/// upcast, a local solve at the root, and the downcast of every node's two
/// cycle neighbors. Phases up to the upcast are labeled "phase1:", the
/// downcast "phase2:".
inline UpcastResult upcast(const Graph& g, std::uint64_t seed, UpcastOptions opt = {}) {
  const std::size_t n = g.size();
  if (opt.cprime <= 0) throw std::invalid_argument("cprime must be positive");
  Network net(g, seed, opt.budgets);
  net.set_transcript(opt.transcript);
  UpcastResult out;
  auto fail_out = [&]() -> UpcastResult& {
    out.report = net.finish(false);
    return out;
  };

  const std::vector<NodeId> leader = elect_leader(net, "phase1:leader");
  if (net.failed() || n == 0) return fail_out();
  const NodeId root = leader[0];
  std::vector<char> is_root(n, 0);
  for (NodeId v = 0; v < n; ++v) is_root[v] = leader[v] == v;
  EchoTree echo(n, std::move(is_root), {opt.parent_rule, false, true});
  if (!net.run_phase("phase1:bfs", echo)) return fail_out();
  if (echo.subtree_size()[root] != n) {
    net.fail(FailureReason::PartitionDisconnected, "BFS tree spans " + std::to_string(echo.subtree_size()[root]) + " nodes");
    return fail_out();
  }
  BfsTree& tree = out.tree;
  tree.root = root;
  tree.parent = echo.parent();
  tree.level = echo.level();
  tree.subtree_size = echo.subtree_size();
  tree.depth = echo.height()[root];

  detail::DfsLabels labels(root, echo.children());
  if (!net.run_phase("phase1:labels", labels)) return fail_out();
  tree.label = labels.labels();

  detail::Gather gather(tree, opt.cprime);
  const std::uint64_t before_up = net.report().rounds;
  if (!net.run_phase("phase1:upcast", gather)) return fail_out();
  out.upcast_rounds = net.report().rounds - before_up;
  out.samples = gather.samples();
  for (auto s : out.samples) out.records_sent += s;
  out.records_received = gather.received();
  out.records_distinct = gather.distinct();
  for (const auto& c : labels.children()[root])
    out.child_loads.emplace_back(c.id, gather.relayed()[c.id] + gather.samples()[c.id]);

  // Local computation at the root costs no rounds.
  const auto t0 = std::chrono::steady_clock::now();
  Graph sample = gather.sampled_graph(n);
  out.sampled_edges = sample.edge_list();
  SequentialResult solved = sequential_rotation_solve(sample, net.rng(root).next());
  out.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.solve_steps = solved.steps;
  if (!solved.success) {
    net.fail(FailureReason::RootSolveFailed,
             solved.failure ? std::string(to_string(*solved.failure)) : std::string("no cycle"));
    return fail_out();
  }
  std::vector<std::pair<NodeId, NodeId>> plan(n);
  for (std::size_t i = 0; i < n; ++i)
    plan[solved.cycle[i]] = {solved.cycle[(i + n - 1) % n], solved.cycle[(i + 1) % n]};
  std::vector<NodeId> by_label(n, kNoNode);
  by_label[0] = root;
  const auto& known = gather.known_labels();
  for (NodeId v = 0; v < n; ++v) {
    if (v == root) continue;
    if (known[v] == kNoNode) throw std::logic_error("root never heard from node " + std::to_string(v));
    by_label[known[v]] = v;
  }

  detail::Downcast down(tree, labels.children(), std::move(plan), std::move(by_label));
  const std::uint64_t before_down = net.report().rounds;
  if (!net.run_phase("phase2:downcast", down)) return fail_out();
  out.downcast_rounds = net.report().rounds - before_down;
  out.certificate = HcCertificate(n);
  for (NodeId v = 0; v < n; ++v) out.certificate.ends[v] = {down.ends()[v].first, down.ends()[v].second};
  out.report = net.finish(true);
  return out;
}

}  // namespace hcdist

#endif  // HCDIST_UPCAST_HPP
