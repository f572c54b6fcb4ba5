#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/core/classification.h"

namespace iotrim::analysis {

enum class ChangeKind : std::uint8_t { kAdded, kRemoved, kChanged };

std::string_view ToString(ChangeKind kind);

struct DestinationChange {
  ChangeKind kind = ChangeKind::kChanged;
  DestinationKey key;
  std::optional<Verdict> before;
  std::optional<Verdict> after;

  /// "added log.us.xiaoyi.com TCP/80 BLOCKABLE_ALL",
  /// "changed ntp.org UDP/123 BLOCKABLE_ALL -> UNBLOCKABLE".
  std::string ToString() const;
  friend bool operator==(const DestinationChange&, const DestinationChange&) = default;
};

struct ChangeSet {
  std::string device;
  std::string epoch_a;
  std::string epoch_b;
  std::vector<DestinationChange> changes;

  bool empty() const { return changes.empty(); }
};

/// Added and changed keys in `b` order, then removed keys in `a` order.
/// Throws kMismatch when the device ids differ.
ChangeSet LongitudinalDiff(const Classification& a, const Classification& b);

}  // namespace iotrim::analysis
