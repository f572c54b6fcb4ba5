#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/analysis/ownership.h"
#include "iotrim/core/classification.h"
#include "iotrim/core/destination.h"

namespace iotrim::analysis {

enum class Grouping : std::uint8_t { kPort, kDomain, kSecondLevel, kOrganization, kServiceClass };
enum class Consistency : std::uint8_t { kAlwaysBlockable, kNeverBlockable, kMixed };

std::string_view ToString(Grouping grouping);
std::string_view ToString(Consistency consistency);
Grouping ParseGrouping(std::string_view text);

/// NTP, HTTP, HTTPS, DNS, ICMP or OTHER.
std::string ServiceClass(const DestinationKey& key);

struct GeneralizationGroup {
  Grouping grouping = Grouping::kPort;
  std::string label;
  std::set<std::string> devices;
  Consistency consistency = Consistency::kMixed;
  /// (device, destination) pairs folded into the group.
  std::size_t members = 0;
};

struct GeneralizationReport {
  /// Sorted by (grouping, label); each pair appears once.
  std::vector<GeneralizationGroup> groups;

  const GeneralizationGroup* Find(Grouping grouping, std::string_view label) const;
};

/// Groups every (device, destination) verdict under each grouping key. IP
/// literals join PORT, ORGANIZATION (via `ownership`, "unknown" when absent)
/// and SERVICE_CLASS groups; DOMAIN and SECOND_LEVEL cover names only.
GeneralizationReport Generalize(std::span<const Classification> classifications,
                                const OwnershipTable* ownership = nullptr);

struct DestinationCount {
  std::size_t destinations = 0;
  /// BLOCKABLE_ALL for every device that contacts it.
  std::size_t blockable = 0;
};

DestinationCount CountDestinations(std::span<const Classification> classifications);

}  // namespace iotrim::analysis
