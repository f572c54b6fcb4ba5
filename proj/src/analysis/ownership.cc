#include "iotrim/analysis/ownership.h"

#include "core/json_codec.h"
#include "iotrim/error.h"

namespace iotrim::analysis {

using json_codec::json;

OwnershipTable::OwnershipTable(std::vector<OwnershipEntry> entries, std::string source)
    : entries_(std::move(entries)), source_(std::move(source)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[i].prefix.network == entries_[j].prefix.network &&
          entries_[i].prefix.length == entries_[j].prefix.length) {
        throw Error(ErrorCode::kDuplicate,
                    "duplicate ownership prefix " + entries_[i].prefix.ToString());
      }
    }
  }
}

OwnershipTable OwnershipTable::Parse(std::string_view text, std::string source) {
  constexpr std::string_view kContext = "ownership entry";
  const json j = json_codec::ParseText(text, "ownership fixture");
  if (!j.is_array()) {
    throw Error(ErrorCode::kValidation, "ownership fixture: expected a list");
  }
  std::vector<OwnershipEntry> entries;
  for (const json& e : j) {
    json_codec::RequireOnlyKeys(e, {"prefix", "organization", "registry"}, kContext);
    entries.push_back(
        {Ipv4Prefix::Parse(json_codec::RequiredString(e, "prefix", kContext)),
         json_codec::RequiredString(e, "organization", kContext),
         json_codec::RequiredString(e, "registry", kContext)});
  }
  return OwnershipTable(std::move(entries), std::move(source));
}

OwnershipTable OwnershipTable::Load(const std::filesystem::path& path) {
  try {
    return Parse(json_codec::ReadFile(path, "ownership fixture"),
                 path.filename().string());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::optional<OwnershipRecord> OwnershipTable::TryLookup(Ipv4 ip) const {
  const OwnershipEntry* best = nullptr;
  for (const auto& entry : entries_) {
    if (entry.prefix.Contains(ip) && (!best || entry.prefix.length > best->prefix.length)) {
      best = &entry;
    }
  }
  if (!best) return std::nullopt;
  return OwnershipRecord{ip, best->organization, best->registry, source_, best->prefix};
}

OwnershipRecord OwnershipTable::Lookup(Ipv4 ip) const {
  if (auto record = TryLookup(ip)) return *record;
  throw Error(ErrorCode::kUnknownOwner, "no owner on record for " + ip.ToString());
}

}  // namespace iotrim::analysis
