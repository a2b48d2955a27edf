#ifndef HCDIST_RUNTIME_HPP
#define HCDIST_RUNTIME_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hcdist/graph.hpp"
#include "hcdist/message.hpp"
#include "hcdist/rng.hpp"

namespace hcdist {

enum class FailureReason : std::uint8_t {
  UnusedExhausted,
  PartitionDisconnected,
  RootSolveFailed,
  StepBudgetExceeded,
  NoBridgeFound,
  HypernodeGraphDisconnected,
  RoundBudgetExceeded,
};

constexpr std::string_view to_string(FailureReason r) noexcept {
  switch (r) {
    case FailureReason::UnusedExhausted: return "UnusedExhausted";
    case FailureReason::PartitionDisconnected: return "PartitionDisconnected";
    case FailureReason::RootSolveFailed: return "RootSolveFailed";
    case FailureReason::StepBudgetExceeded: return "StepBudgetExceeded";
    case FailureReason::NoBridgeFound: return "NoBridgeFound";
    case FailureReason::HypernodeGraphDisconnected: return "HypernodeGraphDisconnected";
    case FailureReason::RoundBudgetExceeded: return "RoundBudgetExceeded";
  }
  return "?";
}

struct PhaseRounds {
  std::string label;
  std::uint64_t rounds = 0;
  friend bool operator==(const PhaseRounds&, const PhaseRounds&) = default;
};

struct SimulationReport {
  std::uint64_t rounds = 0;
  std::uint64_t steps = 0;
  std::uint64_t messages = 0;
  std::vector<std::uint64_t> peak_memory_words;
  bool success = false;
  std::optional<FailureReason> failure_reason;
  std::string failure_detail;
  std::vector<PhaseRounds> phase_rounds;  // in execution order
  std::uint32_t max_message_bits = 0;
  std::uint32_t bandwidth_bits = 0;

  /// Sum of rounds over phases whose label starts with prefix.
  std::uint64_t phase_total(std::string_view prefix) const {
    std::uint64_t s = 0;
    for (const auto& p : phase_rounds) {
      if (std::string_view(p.label).substr(0, prefix.size()) == prefix) s += p.rounds;
    }
    return s;
  }

  std::uint64_t peak_memory_max() const {
    std::uint64_t m = 0;
    for (auto w : peak_memory_words) m = std::max(m, w);
    return m;
  }

  friend bool operator==(const SimulationReport&, const SimulationReport&) = default;
};

/// Thrown on any breach of the CONGEST contract; these are program bugs,
/// never algorithmic outcomes.
class CongestViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Budgets {
  std::uint64_t max_rounds = 0;  // 0 selects default_max_rounds(n)
  double step_mult = 1.0;
};

inline std::uint64_t default_max_rounds(std::size_t n) {
  const double ln = std::log(static_cast<double>(std::max<std::size_t>(n, 3)));
  return static_cast<std::uint64_t>(std::ceil(64.0 * static_cast<double>(n) * ln * ln));
}

/// ceil(7 s ln s * mult): the rotation algorithm's step allowance for s nodes.
inline std::uint64_t step_budget(std::size_t s, double mult = 1.0) {
  if (s < 2) return 0;
  const double x = static_cast<double>(s);
  return static_cast<std::uint64_t>(std::ceil(7.0 * x * std::log(x) * mult));
}

struct Incoming {
  NodeId sender;
  Message msg;
};

struct FloodItem {
  NodeId origin;
  Message msg;
  std::uint64_t start_round;
  std::uint64_t ready_round;  // round by which every scope member holds msg
};

inline constexpr std::uint32_t kNoScope = 0xffffffffu;
inline constexpr std::size_t kDenseAdjacencyLimit = 16384;

/// BFS layering of a scope from one origin; cached per (scope set, origin).
struct FloodPlan {
  std::vector<NodeId> order;          // BFS order, layer by layer
  std::vector<NodeId> parent;         // parallel to order; kNoNode for origin
  std::vector<std::size_t> layer_off; // layer d = order[layer_off[d], layer_off[d+1])
  std::size_t ecc = 0;
  std::uint64_t messages = 0;
};

class Network;
class NodeContext;

/// A distributed algorithm phase. One object holds the state of every node;
/// on_round(ctx) must only touch the state of ctx.id().
class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual void start(Network& net) = 0;
  virtual void on_round(NodeContext& ctx) = 0;
};

class Network {
 public:
  Network(const Graph& g, std::uint64_t seed, Budgets budgets = {})
      : g_(&g),
        n_(g.size()),
        seed_(seed),
        max_rounds_(budgets.max_rounds ? budgets.max_rounds : default_max_rounds(g.size())),
        step_mult_(budgets.step_mult),
        mem_cur_(g.size(), 0),
        next_inbox_(g.size()),
        cur_inbox_(g.size()),
        recv_mark_(g.size(), 0),
        flood_inbox_(g.size()),
        queues_(g.size()),
        holder_(g.size(), 0),
        send_mark_(g.size(), 0),
        call_mark_(g.size(), 0) {
    rng_.reserve(n_);
    for (NodeId v = 0; v < n_; ++v) rng_.emplace_back(seed, v);
    report_.peak_memory_words.assign(n_, 0);
    report_.bandwidth_bits = bandwidth_bits(n_);
    if (n_ <= kDenseAdjacencyLimit) {
      row_words_ = (n_ + 63) / 64;
      adj_bits_.assign(n_ * row_words_, 0);
      for (NodeId u = 0; u < n_; ++u)
        for (NodeId v : g.neighbors(u)) adj_bits_[u * row_words_ + v / 64] |= std::uint64_t{1} << (v % 64);
    }
    set_scopes(std::vector<std::uint32_t>(n_, 0));
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const Graph& graph() const noexcept { return *g_; }
  std::size_t size() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double step_mult() const noexcept { return step_mult_; }
  std::uint64_t now() const noexcept { return now_; }
  bool failed() const noexcept { return report_.failure_reason.has_value(); }
  const SimulationReport& report() const noexcept { return report_; }
  NodeRng& rng(NodeId v) noexcept { return rng_[v]; }

  /// Adjacency test; a bit matrix answers it for graphs up to
  /// kDenseAdjacencyLimit nodes (32 MiB at the limit).
  bool adjacent(NodeId u, NodeId v) const noexcept {
    if (adj_bits_.empty()) return g_->has_edge(u, v);
    if (u >= n_ || v >= n_) return false;
    return adj_bits_[u * row_words_ + v / 64] >> (v % 64) & 1u;
  }

  void set_transcript(std::ostream* os) noexcept { transcript_ = os; }

  // ---- scopes -------------------------------------------------------------

  /// Partitions the nodes into flood/convergecast scopes by label; kNoScope
  /// excludes a node. Disconnected scopes surface as `disconnect_reason`.
  void set_scopes(std::vector<std::uint32_t> labels,
                  FailureReason disconnect_reason = FailureReason::PartitionDisconnected) {
    if (labels.size() != n_) throw std::invalid_argument("scope labels must cover every node");
    scope_ = std::move(labels);
    disconnect_reason_ = disconnect_reason;
    plans_.clear();
    members_.clear();
    std::uint32_t max_label = 0;
    for (auto l : scope_)
      if (l != kNoScope) max_label = std::max(max_label, l);
    members_.resize(static_cast<std::size_t>(max_label) + 1);
    // A single scope spanning every node reuses the graph's own adjacency.
    whole_ = std::all_of(scope_.begin(), scope_.end(), [&](std::uint32_t l) { return l == scope_[0]; }) &&
             (n_ == 0 || scope_[0] != kNoScope);
    if (whole_) {
      members_[scope_[0]].resize(n_);
      for (NodeId v = 0; v < n_; ++v) members_[scope_[0]][v] = v;
      scope_off_.clear();
      scope_adj_.clear();
      scope_adj_.shrink_to_fit();
      return;
    }
    scope_off_.assign(n_ + 1, 0);
    for (NodeId v = 0; v < n_; ++v) {
      if (scope_[v] == kNoScope) continue;
      members_[scope_[v]].push_back(v);
      for (NodeId w : g_->neighbors(v))
        if (scope_[w] == scope_[v]) ++scope_off_[v + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) scope_off_[i + 1] += scope_off_[i];
    scope_adj_.resize(scope_off_[n_]);
    for (NodeId v = 0; v < n_; ++v) {
      if (scope_[v] == kNoScope) continue;
      std::size_t k = scope_off_[v];
      for (NodeId w : g_->neighbors(v))
        if (scope_[w] == scope_[v]) scope_adj_[k++] = w;
    }
  }

  std::uint32_t scope_of(NodeId v) const noexcept { return scope_[v]; }
  const std::vector<std::uint32_t>& scope_labels() const noexcept { return scope_; }

  std::span<const NodeId> scope_neighbors(NodeId v) const noexcept {
    if (whole_) return g_->neighbors(v);
    return {scope_adj_.data() + scope_off_[v], scope_off_[v + 1] - scope_off_[v]};
  }

  std::span<const NodeId> scope_members(std::uint32_t label) const noexcept {
    if (label >= members_.size()) return {};
    return members_[label];
  }

  const FloodPlan& flood_plan(NodeId origin) {
    auto it = plans_.find(origin);
    if (it != plans_.end()) return *it->second;
    auto plan = std::make_unique<FloodPlan>();
    plan->order.push_back(origin);
    plan->parent.push_back(kNoNode);
    plan->layer_off.push_back(0);
    // Visited marks are stamped with a per-BFS id to avoid O(n) clears.
    if (bfs_mark_.size() != n_) bfs_mark_.assign(n_, 0);
    if (bfs_dist_.size() != n_) bfs_dist_.assign(n_, 0);
    ++bfs_stamp_;
    bfs_mark_[origin] = bfs_stamp_;
    bfs_dist_[origin] = 0;
    std::size_t layer_begin = 0;
    while (layer_begin < plan->order.size()) {
      const std::size_t layer_end = plan->order.size();
      for (std::size_t i = layer_begin; i < layer_end; ++i) {
        NodeId v = plan->order[i];
        for (NodeId w : scope_neighbors(v)) {
          if (bfs_mark_[w] != bfs_stamp_) {
            bfs_mark_[w] = bfs_stamp_;
            bfs_dist_[w] = bfs_dist_[v] + 1;
            plan->order.push_back(w);
            plan->parent.push_back(v);
          }
        }
      }
      plan->layer_off.push_back(layer_end);
      layer_begin = layer_end;
    }
    plan->ecc = plan->layer_off.size() - 2;
    // Every informed node except the last layer forwards to each scope
    // neighbor that did not deliver the message to it.
    std::uint64_t msgs = 0;
    for (NodeId v : plan->order) {
      const std::uint32_t d = bfs_dist_[v];
      if (d >= plan->ecc) continue;
      for (NodeId w : scope_neighbors(v)) {
        if (!(d > 0 && bfs_dist_[w] + 1 == d)) ++msgs;
      }
    }
    plan->messages = msgs;
    auto& ref = *plan;
    plans_.emplace(origin, std::move(plan));
    return ref;
  }

  // ---- memory ---------------------------------------------------------------

  void charge(NodeId v, std::uint64_t words) noexcept {
    mem_cur_[v] += words;
    report_.peak_memory_words[v] = std::max(report_.peak_memory_words[v], mem_cur_[v]);
  }
  void release(NodeId v, std::uint64_t words) noexcept {
    mem_cur_[v] -= std::min(mem_cur_[v], words);
  }
  std::uint64_t memory(NodeId v) const noexcept { return mem_cur_[v]; }

  // ---- failure / steps ------------------------------------------------------

  void fail(FailureReason r, std::string detail = {}) {
    if (failed()) return;
    report_.failure_reason = r;
    report_.failure_detail = std::move(detail);
  }

  /// Records one step against `key`; false (and no step) once budget is spent.
  bool count_step(std::uint64_t key, std::uint64_t budget) {
    auto& c = step_counts_[key];
    if (c >= budget) return false;
    ++c;
    ++report_.steps;
    return true;
  }

  std::uint64_t steps_for(std::uint64_t key) const {
    auto it = step_counts_.find(key);
    return it == step_counts_.end() ? 0 : it->second;
  }

  // ---- phases ---------------------------------------------------------------

  /// Schedules v's first on_round call in the next round of the running phase.
  void wake(NodeId v) { wakes_.emplace(now_ + 1, v); }
  void wake_at(NodeId v, std::uint64_t round) { wakes_.emplace(std::max(round, now_ + 1), v); }

  /// One round in which each node in `announcers` tells all its neighbors a
  /// value. Receivers keep what they need; the runtime only does accounting.
  void announce(const std::string& label, const std::vector<bool>& announcers) {
    if (failed()) return;
    std::uint64_t msgs = 0;
    for (NodeId v = 0; v < n_; ++v)
      if (announcers[v]) msgs += g_->degree(v);
    report_.messages += msgs;
    const std::uint64_t r = msgs ? 1 : 0;
    report_.rounds += r;
    report_.phase_rounds.push_back({label, r});
    const std::uint32_t bits = kTagBits + field_bits(n_);
    if (msgs) report_.max_message_bits = std::max(report_.max_message_bits, bits);
  }

  /// Runs the protocol until quiescence or failure; true iff no failure.
  bool run_phase(const std::string& label, Protocol& protocol) {
    if (failed()) return false;
    phase_start_ = now_;
    last_send_ = now_;
    protocol.start(*this);
    while (!failed() && pending()) {
      step_round(protocol);
      if (report_.rounds + (now_ - phase_start_) > max_rounds_) {
        fail(FailureReason::RoundBudgetExceeded, "phase " + label);
      }
    }
    const std::uint64_t r = last_send_ - phase_start_;
    report_.rounds += r;
    report_.phase_rounds.push_back({label, r});
    drain();
    return !failed();
  }

  SimulationReport finish(bool success) {
    report_.success = success && !failed();
    return report_;
  }

  // ---- used by NodeContext --------------------------------------------------

  void send(NodeId from, NodeId to, const Message& m) {
    check_message(from, to, m);
    transmit(from, to, m);
  }

  void enqueue(NodeId from, NodeId to, const Message& m) {
    check_message(from, to, m);
    auto& qs = queues_[from];
    auto [slot, fresh] = queue_slot_.try_emplace(edge_key(from, to), static_cast<std::uint32_t>(qs.size()));
    if (fresh) qs.push_back({to, 0, {}});
    qs[slot->second].q.push_back(m);
    charge(from, queue_words(m));
    if (!holder_[from]) {
      holder_[from] = 1;
      holders_.push_back(from);
    }
  }

  std::uint64_t start_flood(NodeId origin, const Message& m) {
    if (!m.fits(n_)) throw CongestViolation("flood payload field exceeds the field width");
    if (scope_[origin] == kNoScope) throw std::logic_error("flood origin outside every scope");
    if (now_ == phase_start_) throw std::logic_error("floods start from on_round, not start()");
    const FloodPlan& plan = flood_plan(origin);
    if (plan.order.size() != members_[scope_[origin]].size()) {
      fail(disconnect_reason_, "scope " + std::to_string(scope_[origin]) + " is disconnected");
      return now_;
    }
    report_.messages += plan.messages;
    report_.max_message_bits = std::max(report_.max_message_bits, m.size_bits(n_));
    if (plan.ecc == 0) return now_;
    last_send_ = std::max(last_send_, now_ + plan.ecc - 1);
    floods_.push_back({&plan, origin, m, now_});
    return now_ + plan.ecc;
  }

 private:
  struct EdgeQueue {
    NodeId to;
    std::uint32_t head;  // q[head..] still waiting
    std::vector<Message> q;
    bool empty() const noexcept { return head == q.size(); }
  };
  struct ActiveFlood {
    const FloodPlan* plan;
    NodeId origin;
    Message msg;
    std::uint64_t start;
  };

  friend class NodeContext;

  static std::uint64_t queue_words(const Message& m) noexcept { return std::max<std::uint64_t>(1, m.arity); }
  // Puts an already validated message on the wire for the next round.
  void transmit(NodeId from, NodeId to, const Message& m) {
    if (send_mark_[to] == turn_) {
      throw CongestViolation("two messages on edge " + std::to_string(from) + "->" +
                             std::to_string(to) + " in one round");
    }
    send_mark_[to] = turn_;
    // Nodes act in ascending id order, so each inbox ends up sorted by sender.
    next_inbox_[to].push_back({from, m});
    if (recv_mark_[to] != now_ + 1) {
      recv_mark_[to] = now_ + 1;
      receivers_.push_back(to);
    }
    ++report_.messages;
    last_send_ = now_;
    if (transcript_) write_line(global_round(), from, to, m);
  }

  static std::uint64_t edge_key(NodeId from, NodeId to) noexcept { return std::uint64_t{from} << 32 | to; }

  std::uint64_t global_round() const noexcept { return report_.rounds + (now_ - phase_start_); }

  void check_message(NodeId from, NodeId to, const Message& m) const {
    if (!adjacent(from, to)) {
      throw CongestViolation("message on non-edge " + std::to_string(from) + "->" + std::to_string(to));
    }
    if (!m.fits(n_)) throw CongestViolation("message field exceeds the field width");
    if (m.size_bits(n_) > report_.bandwidth_bits) throw CongestViolation("message exceeds bandwidth");
  }

  void write_line(std::uint64_t round, NodeId from, NodeId to, const Message& m) {
    auto& os = *transcript_;
    os << round << ' ' << from << ' ' << to << ' ' << to_string(m.kind);
    for (std::size_t i = 0; i < 4; ++i) {
      os << ' ';
      if (i < m.arity) os << m.f[i];
      else os << '-';
    }
    os << '\n';
  }

  bool pending() const noexcept {
    return !receivers_.empty() || !floods_.empty() || !wakes_.empty() || !holders_.empty();
  }

  void step_round(Protocol& protocol);

  // Drops leftover in-flight state after a failed phase.
  void drain() {
    if (failed())
      for (auto& f : flood_inbox_) f.clear();
    for (NodeId v : receivers_) next_inbox_[v].clear();
    receivers_.clear();
    for (NodeId v : active_) cur_inbox_[v].clear();  // left over by a failed round
    active_.clear();
    floods_.clear();
    while (!wakes_.empty()) wakes_.pop();
    for (NodeId v : holders_) {
      for (auto& q : queues_[v])
        for (std::size_t i = q.head; i < q.q.size(); ++i) release(v, queue_words(q.q[i]));
      for (auto& q : queues_[v]) queue_slot_.erase(edge_key(v, q.to));
      queues_[v].clear();
      holder_[v] = 0;
    }
    holders_.clear();
  }

  const Graph* g_;
  std::size_t n_;
  std::size_t row_words_ = 0;
  std::vector<std::uint64_t> adj_bits_;
  std::uint64_t seed_;
  std::uint64_t max_rounds_;
  double step_mult_;
  std::vector<NodeRng> rng_;
  std::vector<std::uint64_t> mem_cur_;
  SimulationReport report_;
  std::uint64_t now_ = 0;
  std::uint64_t phase_start_ = 0;
  std::uint64_t last_send_ = 0;
  std::uint64_t turn_ = 0;

  std::vector<std::uint32_t> scope_;
  bool whole_ = false;
  std::vector<std::size_t> scope_off_;
  std::vector<NodeId> scope_adj_;
  std::vector<std::vector<NodeId>> members_;
  FailureReason disconnect_reason_ = FailureReason::PartitionDisconnected;
  std::unordered_map<NodeId, std::unique_ptr<FloodPlan>> plans_;
  std::vector<std::uint64_t> bfs_mark_;
  std::vector<std::uint32_t> bfs_dist_;
  std::uint64_t bfs_stamp_ = 0;

  std::vector<std::vector<Incoming>> next_inbox_;  // filled this round, read next round
  std::vector<std::vector<Incoming>> cur_inbox_;
  std::vector<std::uint64_t> recv_mark_;
  std::vector<NodeId> receivers_;
  std::vector<ActiveFlood> floods_;
  std::vector<std::vector<FloodItem>> flood_inbox_;
  std::vector<std::vector<EdgeQueue>> queues_;
  std::unordered_map<std::uint64_t, std::uint32_t> queue_slot_;  // (from, to) -> index in queues_[from]
  std::vector<char> holder_;
  std::vector<NodeId> holders_;
  std::priority_queue<std::pair<std::uint64_t, NodeId>, std::vector<std::pair<std::uint64_t, NodeId>>,
                      std::greater<>>
      wakes_;
  std::vector<std::uint64_t> send_mark_;
  std::vector<std::uint64_t> call_mark_;
  std::vector<NodeId> active_;
  std::unordered_map<std::uint64_t, std::uint64_t> step_counts_;
  std::ostream* transcript_ = nullptr;
};

/// A node's view during one round.
class NodeContext {
 public:
  NodeContext(Network& net, NodeId id, std::span<const Incoming> inbox, std::span<const FloodItem> floods)
      : net_(&net), id_(id), inbox_(inbox), floods_(floods) {}

  NodeId id() const noexcept { return id_; }
  std::uint64_t round() const noexcept { return net_->now(); }
  std::size_t network_size() const noexcept { return net_->size(); }
  const Graph& graph() const noexcept { return net_->graph(); }
  bool adjacent(NodeId w) const noexcept { return net_->adjacent(id_, w); }

  /// Messages from the previous round, sorted by sender id.
  std::span<const Incoming> inbox() const noexcept { return inbox_; }
  /// Flood payloads that reached this node this round, in start order.
  std::span<const FloodItem> floods() const noexcept { return floods_; }

  std::span<const NodeId> neighbors() const noexcept { return net_->graph().neighbors(id_); }
  std::span<const NodeId> scope_neighbors() const noexcept { return net_->scope_neighbors(id_); }
  std::uint32_t scope() const noexcept { return net_->scope_of(id_); }

  void send(NodeId to, const Message& m) { net_->send(id_, to, m); }
  /// Per-edge FIFO: one queued message leaves per edge per round.
  void enqueue(NodeId to, const Message& m) { net_->enqueue(id_, to, m); }
  /// Floods m through this node's scope; returns the round at which every
  /// member has received it.
  std::uint64_t flood(const Message& m) { return net_->start_flood(id_, m); }

  void wake_next() { net_->wake(id_); }
  void wake_at(std::uint64_t round) { net_->wake_at(id_, round); }

  void fail(FailureReason r, std::string detail = {}) { net_->fail(r, std::move(detail)); }
  bool count_step(std::uint64_t key, std::uint64_t budget) { return net_->count_step(key, budget); }
  void charge(std::uint64_t words) { net_->charge(id_, words); }
  void release(std::uint64_t words) { net_->release(id_, words); }
  NodeRng& rng() noexcept { return net_->rng(id_); }

 private:
  Network* net_;
  NodeId id_;
  std::span<const Incoming> inbox_;
  std::span<const FloodItem> floods_;
};

inline void Network::step_round(Protocol& protocol) {
  ++now_;
  active_.clear();
  active_.swap(receivers_);
  for (NodeId v : active_) {
    cur_inbox_[v].swap(next_inbox_[v]);
    call_mark_[v] = now_;
  }
  for (std::size_t i = 0; i < floods_.size();) {
    auto& fl = floods_[i];
    const std::size_t d = now_ - fl.start;
    const FloodPlan& p = *fl.plan;
    const std::uint64_t ready = fl.start + p.ecc;
    for (std::size_t k = p.layer_off[d]; k < p.layer_off[d + 1]; ++k) {
      NodeId v = p.order[k];
      flood_inbox_[v].push_back({fl.origin, fl.msg, fl.start, ready});
      if (transcript_) write_line(global_round() - 1, p.parent[k], v, fl.msg);
      if (call_mark_[v] != now_) {
        call_mark_[v] = now_;
        active_.push_back(v);
      }
    }
    if (d >= p.ecc) {
      floods_[i] = floods_.back();
      floods_.pop_back();
    } else {
      ++i;
    }
  }
  while (!wakes_.empty() && wakes_.top().first <= now_) {
    NodeId v = wakes_.top().second;
    wakes_.pop();
    if (call_mark_[v] != now_) {
      call_mark_[v] = now_;
      active_.push_back(v);
    }
  }
  // Queue holders transmit without an on_round call unless otherwise active.
  std::vector<NodeId> holders;
  holders.swap(holders_);
  for (NodeId v : holders) holder_[v] = 0;
  std::vector<NodeId> order = active_;
  for (NodeId v : holders)
    if (call_mark_[v] != now_) order.push_back(v);
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  for (NodeId v : order) {
    ++turn_;
    if (call_mark_[v] == now_) {
      auto& inbox = cur_inbox_[v];
      NodeContext ctx(*this, v, inbox, flood_inbox_[v]);
      protocol.on_round(ctx);
      flood_inbox_[v].clear();
      // Large bursts are rare; do not keep their buffers alive.
      if (inbox.capacity() > 64) std::vector<Incoming>().swap(inbox);
      else inbox.clear();
      if (failed()) return;
    }
    auto& qs = queues_[v];
    if (qs.empty()) continue;
    for (auto& q : qs) {
      if (q.empty() || send_mark_[q.to] == turn_) continue;
      const Message m = q.q[q.head++];
      release(v, queue_words(m));
      transmit(v, q.to, m);
    }
    // Compact drained queues and re-point the slots of those that moved.
    std::size_t keep = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      if (qs[i].empty()) {
        queue_slot_.erase(edge_key(v, qs[i].to));
        continue;
      }
      if (keep != i) {
        qs[keep] = std::move(qs[i]);
        queue_slot_[edge_key(v, qs[keep].to)] = static_cast<std::uint32_t>(keep);
      }
      ++keep;
    }
    qs.resize(keep);
    if (!qs.empty() && !holder_[v]) {
      holder_[v] = 1;
      holders_.push_back(v);
    }
  }
}

}  // namespace hcdist

#endif  // HCDIST_RUNTIME_HPP
