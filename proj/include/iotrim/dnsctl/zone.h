#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/core/ipv4.h"

namespace iotrim::dnsctl {

struct ZoneEntry {
  std::string name;
  std::vector<Ipv4> addresses;
  std::uint32_t ttl = 300;
};

/// Static A-record data. File form: {"name": {"addresses": [...], "ttl": n}}.
class Zone {
 public:
  Zone() = default;
  explicit Zone(std::vector<ZoneEntry> entries);

  static Zone Parse(std::string_view text);
  static Zone Load(const std::filesystem::path& path);
  std::string Serialize() const;

  /// Case-insensitive exact match; nullptr when absent.
  const ZoneEntry* Find(std::string_view name) const;
  /// Index of the entry in entries(), if present.
  std::optional<std::size_t> IndexOf(std::string_view name) const;
  const std::vector<ZoneEntry>& entries() const { return entries_; }

  /// Reverse map used by offline byte-count checks.
  std::optional<std::string> NameForAddress(Ipv4 address) const;

 private:
  std::vector<ZoneEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace iotrim::dnsctl
