#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/core/destination.h"

namespace iotrim {

enum class Verdict : std::uint8_t { kBlockableAll, kBlockableSome, kUnblockable };

std::string_view ToString(Verdict verdict);
Verdict ParseVerdict(std::string_view text);

struct ClassificationEntry {
  DestinationKey key;
  Verdict verdict = Verdict::kUnblockable;
  /// ExperimentRecord ids that support the verdict.
  std::vector<std::string> evidence;
};

/// Per-device verdicts, entries in first-observed order.
struct Classification {
  std::string device;
  std::string epoch;
  std::vector<ClassificationEntry> entries;

  const ClassificationEntry* Find(const DestinationKey& key) const;
};

/// Folds per-experiment outcomes with one destination blocked into a verdict:
/// all pass -> BLOCKABLE_ALL, all fail -> UNBLOCKABLE, otherwise
/// BLOCKABLE_SOME. Requires at least one outcome.
Verdict FoldVerdict(std::size_t passes, std::size_t failures);

}  // namespace iotrim
