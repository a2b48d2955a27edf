#ifndef HCDIST_MESSAGE_HPP
#define HCDIST_MESSAGE_HPP

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

namespace hcdist {

enum class MessageKind : std::uint8_t {
  Progress,
  Rotation,
  Verify,
  Verified,
  BuildBridge,
  Renumber,
  LeaderProbe,
  BfsExplore,
  EdgeRecord,
  HcAssign,
  SizeReport,
  Control,
  Query,
  Candidate,
};

inline constexpr std::size_t kMessageKindCount = 14;
inline constexpr std::uint32_t kTagBits = 4;
static_assert(kMessageKindCount <= (1u << kTagBits));

constexpr std::string_view to_string(MessageKind k) noexcept {
  switch (k) {
    case MessageKind::Progress: return "Progress";
    case MessageKind::Rotation: return "Rotation";
    case MessageKind::Verify: return "Verify";
    case MessageKind::Verified: return "Verified";
    case MessageKind::BuildBridge: return "BuildBridge";
    case MessageKind::Renumber: return "Renumber";
    case MessageKind::LeaderProbe: return "LeaderProbe";
    case MessageKind::BfsExplore: return "BfsExplore";
    case MessageKind::EdgeRecord: return "EdgeRecord";
    case MessageKind::HcAssign: return "HcAssign";
    case MessageKind::SizeReport: return "SizeReport";
    case MessageKind::Control: return "Control";
    case MessageKind::Query: return "Query";
    case MessageKind::Candidate: return "Candidate";
  }
  return "?";
}

/// ceil(log2 n) bits per payload field, at least one. Node ids always fit;
/// counts and 1-based positions that can reach n travel as value - 1.
constexpr std::uint32_t field_bits(std::size_t n) noexcept {
  return n <= 2 ? 1 : static_cast<std::uint32_t>(std::bit_width(static_cast<std::uint64_t>(n - 1)));
}

constexpr std::uint32_t bandwidth_bits(std::size_t n) noexcept {
  return kTagBits + 4 * field_bits(n);
}

struct Message {
  MessageKind kind = MessageKind::Control;
  std::uint8_t arity = 0;
  std::array<std::uint32_t, 4> f{};

  static Message make(MessageKind kind, std::initializer_list<std::uint32_t> fields) {
    if (fields.size() > 4) throw std::invalid_argument("message carries at most 4 fields");
    Message m;
    m.kind = kind;
    m.arity = static_cast<std::uint8_t>(fields.size());
    std::size_t i = 0;
    for (std::uint32_t x : fields) m.f[i++] = x;
    return m;
  }

  std::uint32_t size_bits(std::size_t n) const noexcept { return kTagBits + arity * field_bits(n); }

  /// Every field must be encodable in field_bits(n) bits.
  bool fits(std::size_t n) const noexcept {
    if (arity > 4) return false;
    const std::uint64_t limit = std::uint64_t{1} << field_bits(n);
    for (std::size_t i = 0; i < arity; ++i) {
      if (f[i] >= limit) return false;
    }
    return true;
  }

  friend bool operator==(const Message&, const Message&) = default;
};

}  // namespace hcdist

#endif  // HCDIST_MESSAGE_HPP
