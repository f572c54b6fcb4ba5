#include "iotrim/analysis/generalize.h"

#include <algorithm>
#include <map>
#include <optional>

#include "iotrim/core/public_suffix.h"
#include "iotrim/error.h"

namespace iotrim::analysis {

std::string_view ToString(Grouping grouping) {
  switch (grouping) {
    case Grouping::kPort: return "PORT";
    case Grouping::kDomain: return "DOMAIN";
    case Grouping::kSecondLevel: return "SECOND_LEVEL";
    case Grouping::kOrganization: return "ORGANIZATION";
    case Grouping::kServiceClass: return "SERVICE_CLASS";
  }
  return "?";
}

std::string_view ToString(Consistency consistency) {
  switch (consistency) {
    case Consistency::kAlwaysBlockable: return "ALWAYS_BLOCKABLE";
    case Consistency::kNeverBlockable: return "NEVER_BLOCKABLE";
    case Consistency::kMixed: return "MIXED";
  }
  return "?";
}

Grouping ParseGrouping(std::string_view text) {
  for (auto g : {Grouping::kPort, Grouping::kDomain, Grouping::kSecondLevel,
                 Grouping::kOrganization, Grouping::kServiceClass}) {
    if (ToString(g) == text) return g;
  }
  throw Error(ErrorCode::kValidation, "unknown grouping '" + std::string(text) + "'");
}

std::string ServiceClass(const DestinationKey& key) {
  if (key.transport() == Transport::kIcmp) return "ICMP";
  const auto port = key.port().value_or(0);
  if (key.transport() == Transport::kUdp && port == 123) return "NTP";
  if (port == 53) return "DNS";
  if (key.transport() == Transport::kTcp && port == 80) return "HTTP";
  if (key.transport() == Transport::kTcp && port == 443) return "HTTPS";
  return "OTHER";
}

const GeneralizationGroup* GeneralizationReport::Find(Grouping grouping,
                                                      std::string_view label) const {
  for (const auto& g : groups) {
    if (g.grouping == grouping && g.label == label) return &g;
  }
  return nullptr;
}

namespace {

std::optional<std::string> SecondLevel(const DestinationKey& key) {
  if (key.is_ip_literal()) return std::nullopt;
  try {
    return SecondLevelLabel(key.name());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNotApplicable) throw;
    return key.name();
  }
}

}  // namespace

GeneralizationReport Generalize(std::span<const Classification> classifications,
                                const OwnershipTable* ownership) {
  struct Acc {
    std::set<std::string> devices;
    std::size_t members = 0;
    std::size_t all = 0;
    std::size_t never = 0;
  };
  std::map<std::pair<Grouping, std::string>, Acc> acc;
  for (const auto& c : classifications) {
    for (const auto& entry : c.entries) {
      const DestinationKey& key = entry.key;
      std::vector<std::pair<Grouping, std::string>> labels;
      if (key.port()) {
        labels.emplace_back(Grouping::kPort, std::string(ToString(key.transport())) + "/" +
                                                 std::to_string(*key.port()));
      }
      if (!key.is_ip_literal()) labels.emplace_back(Grouping::kDomain, key.name());
      const auto second = SecondLevel(key);
      if (second) labels.emplace_back(Grouping::kSecondLevel, *second);
      if (key.is_ip_literal()) {
        std::optional<OwnershipRecord> owner;
        if (ownership) owner = ownership->TryLookup(key.address());
        labels.emplace_back(Grouping::kOrganization,
                            owner ? owner->organization : std::string("unknown"));
      } else {
        labels.emplace_back(Grouping::kOrganization, *second);
      }
      labels.emplace_back(Grouping::kServiceClass, ServiceClass(key));
      for (auto& label : labels) {
        Acc& a = acc[label];
        a.devices.insert(c.device);
        ++a.members;
        if (entry.verdict == Verdict::kBlockableAll) ++a.all;
        if (entry.verdict == Verdict::kUnblockable) ++a.never;
      }
    }
  }
  GeneralizationReport report;
  for (auto& [label, a] : acc) {
    GeneralizationGroup g;
    g.grouping = label.first;
    g.label = label.second;
    g.devices = std::move(a.devices);
    g.members = a.members;
    g.consistency = a.all == a.members     ? Consistency::kAlwaysBlockable
                    : a.never == a.members ? Consistency::kNeverBlockable
                                           : Consistency::kMixed;
    report.groups.push_back(std::move(g));
  }
  return report;
}

DestinationCount CountDestinations(std::span<const Classification> classifications) {
  std::map<DestinationKey, bool> blockable;
  for (const auto& c : classifications) {
    for (const auto& entry : c.entries) {
      const bool all = entry.verdict == Verdict::kBlockableAll;
      auto [it, inserted] = blockable.emplace(entry.key, all);
      if (!inserted) it->second = it->second && all;
    }
  }
  DestinationCount out;
  out.destinations = blockable.size();
  out.blockable = static_cast<std::size_t>(
      std::count_if(blockable.begin(), blockable.end(),
                    [](const auto& kv) { return kv.second; }));
  return out;
}

}  // namespace iotrim::analysis
