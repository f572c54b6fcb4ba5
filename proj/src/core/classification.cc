#include "iotrim/core/classification.h"

#include "iotrim/error.h"

namespace iotrim {

std::string_view ToString(Verdict verdict) {
  switch (verdict) {
    case Verdict::kBlockableAll: return "BLOCKABLE_ALL";
    case Verdict::kBlockableSome: return "BLOCKABLE_SOME";
    case Verdict::kUnblockable: return "UNBLOCKABLE";
  }
  return "?";
}

Verdict ParseVerdict(std::string_view text) {
  if (text == "BLOCKABLE_ALL") return Verdict::kBlockableAll;
  if (text == "BLOCKABLE_SOME") return Verdict::kBlockableSome;
  if (text == "UNBLOCKABLE") return Verdict::kUnblockable;
  throw Error(ErrorCode::kValidation, "unknown verdict '" + std::string(text) + "'");
}

const ClassificationEntry* Classification::Find(const DestinationKey& key) const {
  for (const auto& entry : entries) {
    if (entry.key == key) return &entry;
  }
  return nullptr;
}

Verdict FoldVerdict(std::size_t passes, std::size_t failures) {
  if (passes + failures == 0) {
    throw Error(ErrorCode::kPrecondition, "no validated experiments to fold");
  }
  if (failures == 0) return Verdict::kBlockableAll;
  if (passes == 0) return Verdict::kUnblockable;
  return Verdict::kBlockableSome;
}

}  // namespace iotrim
