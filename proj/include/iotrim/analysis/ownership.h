#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/core/ipv4.h"

namespace iotrim::analysis {

struct OwnershipEntry {
  Ipv4Prefix prefix;
  std::string organization;
  std::string registry;
};

struct OwnershipRecord {
  Ipv4 ip;
  std::string organization;
  std::string registry;
  /// Fixture the answer came from.
  std::string source;
  Ipv4Prefix prefix;
};

/// Offline WHOIS stand-in: a list of {prefix, organization, registry}.
class OwnershipTable {
 public:
  OwnershipTable() = default;
  OwnershipTable(std::vector<OwnershipEntry> entries, std::string source);

  static OwnershipTable Parse(std::string_view text, std::string source = "inline");
  static OwnershipTable Load(const std::filesystem::path& path);

  /// Longest matching prefix. Throws kUnknownOwner when nothing matches.
  OwnershipRecord Lookup(Ipv4 ip) const;
  std::optional<OwnershipRecord> TryLookup(Ipv4 ip) const;

  const std::vector<OwnershipEntry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::vector<OwnershipEntry> entries_;
  std::string source_;
};

}  // namespace iotrim::analysis
