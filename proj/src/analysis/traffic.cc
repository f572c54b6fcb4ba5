#include "iotrim/analysis/traffic.h"

#include <algorithm>
#include <map>
#include <set>

#include "iotrim/analysis/generalize.h"

namespace iotrim::analysis {

capture::TrafficTotals TotalsFromWindows(
    std::span<const orchestrator::WindowSummary> windows) {
  capture::TrafficTotals totals;
  for (const auto& window : windows) {
    for (const auto& stats : window.destinations) {
      totals.bytes_by_key[stats.key] += stats.bytes;
      totals.total_bytes += stats.bytes;
    }
  }
  return totals;
}

std::vector<TrafficRow> CharacterizeTraffic(
    std::span<const Classification> classifications,
    std::span<const orchestrator::WindowSummary> windows) {
  std::vector<DestinationKey> order;
  std::map<DestinationKey, std::set<std::string>> devices;
  std::map<DestinationKey, bool> blockable;
  for (const auto& c : classifications) {
    for (const auto& entry : c.entries) {
      const bool all = entry.verdict == Verdict::kBlockableAll;
      auto [it, inserted] = blockable.emplace(entry.key, all);
      if (inserted) order.push_back(entry.key);
      it->second = it->second && all;
      devices[entry.key].insert(c.device);
    }
  }
  std::map<std::string, std::vector<orchestrator::WindowSummary>> by_device;
  for (const auto& w : windows) by_device[w.device].push_back(w);
  std::vector<TrafficRow> rows;
  for (const auto& key : order) {
    if (!blockable[key]) continue;
    capture::TrafficTotals totals;
    for (const auto& device : devices[key]) totals.Merge(TotalsFromWindows(by_device[device]));
    const std::string service = ServiceClass(key);
    rows.push_back({key, devices[key].size(),
                    service == "NTP" ? service : std::string(ToString(key.transport())),
                    key.port(), totals.SharePercent(key)});
  }
  return rows;
}

}  // namespace iotrim::analysis
