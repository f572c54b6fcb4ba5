#include "iotrim/dnsctl/zone.h"

#include <fstream>
#include <sstream>

#include "core/json_codec.h"
#include "iotrim/core/destination.h"
#include "iotrim/error.h"

namespace iotrim::dnsctl {

using json_codec::json;

Zone::Zone(std::vector<ZoneEntry> entries) {
  for (auto& entry : entries) {
    entry.name = NormalizeDnsName(entry.name);
    if (entry.addresses.empty()) {
      throw Error(ErrorCode::kValidation,
                  "zone entry '" + entry.name + "' needs at least one address");
    }
    if (index_.contains(entry.name)) {
      throw Error(ErrorCode::kDuplicate, "duplicate zone entry '" + entry.name + "'");
    }
    index_.emplace(entry.name, entries_.size());
    entries_.push_back(std::move(entry));
  }
}

Zone Zone::Parse(std::string_view text) {
  const json j = json_codec::ParseText(text, "zone file");
  if (!j.is_object()) {
    throw Error(ErrorCode::kValidation, "zone file: expected an object");
  }
  std::vector<ZoneEntry> entries;
  for (const auto& [name, value] : j.items()) {
    const std::string context = "zone entry '" + name + "'";
    json_codec::RequireOnlyKeys(value, {"addresses", "ttl"}, context);
    ZoneEntry entry;
    entry.name = name;
    for (const json& a : json_codec::Required(value, "addresses", context)) {
      entry.addresses.push_back(Ipv4::Parse(a.get<std::string>()));
    }
    if (auto it = value.find("ttl"); it != value.end()) {
      if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw Error(ErrorCode::kValidation, context + ": ttl must be >= 0");
      }
      entry.ttl = it->get<std::uint32_t>();
    }
    entries.push_back(std::move(entry));
  }
  return Zone(std::move(entries));
}

Zone Zone::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read zone file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

std::string Zone::Serialize() const {
  json j = json::object();
  for (const auto& entry : entries_) {
    json addrs = json::array();
    for (Ipv4 a : entry.addresses) addrs.push_back(a.ToString());
    j[entry.name] = json{{"addresses", std::move(addrs)}, {"ttl", entry.ttl}};
  }
  return j.dump(2);
}

const ZoneEntry* Zone::Find(std::string_view name) const {
  auto idx = IndexOf(name);
  return idx ? &entries_[*idx] : nullptr;
}

std::optional<std::size_t> Zone::IndexOf(std::string_view name) const {
  if (!IsValidDnsName(name)) return std::nullopt;
  auto it = index_.find(NormalizeDnsName(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Zone::NameForAddress(Ipv4 address) const {
  for (const auto& entry : entries_) {
    for (Ipv4 a : entry.addresses) {
      if (a == address) return entry.name;
    }
  }
  return std::nullopt;
}

}  // namespace iotrim::dnsctl
