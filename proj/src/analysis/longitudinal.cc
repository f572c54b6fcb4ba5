#include "iotrim/analysis/longitudinal.h"

#include "iotrim/error.h"

namespace iotrim::analysis {

std::string_view ToString(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::kAdded: return "added";
    case ChangeKind::kRemoved: return "removed";
    case ChangeKind::kChanged: return "changed";
  }
  return "?";
}

std::string DestinationChange::ToString() const {
  std::string out = std::string(analysis::ToString(kind)) + " " + key.ToString();
  if (kind == ChangeKind::kChanged) {
    out += " " + std::string(iotrim::ToString(*before)) + " -> " +
           std::string(iotrim::ToString(*after));
  } else {
    out += " " + std::string(iotrim::ToString(kind == ChangeKind::kAdded ? *after : *before));
  }
  return out;
}

ChangeSet LongitudinalDiff(const Classification& a, const Classification& b) {
  if (a.device != b.device) {
    throw Error(ErrorCode::kMismatch,
                "cannot diff '" + a.device + "' against '" + b.device + "'");
  }
  ChangeSet out{a.device, a.epoch, b.epoch, {}};
  for (const auto& entry : b.entries) {
    const auto* old = a.Find(entry.key);
    if (!old) {
      out.changes.push_back({ChangeKind::kAdded, entry.key, std::nullopt, entry.verdict});
    } else if (old->verdict != entry.verdict) {
      out.changes.push_back({ChangeKind::kChanged, entry.key, old->verdict, entry.verdict});
    }
  }
  for (const auto& entry : a.entries) {
    if (!b.Find(entry.key)) {
      out.changes.push_back({ChangeKind::kRemoved, entry.key, entry.verdict, std::nullopt});
    }
  }
  return out;
}

}  // namespace iotrim::analysis
