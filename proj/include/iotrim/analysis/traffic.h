#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotrim/capture/capture.h"
#include "iotrim/core/classification.h"
#include "iotrim/orchestrator/campaign.h"

namespace iotrim::analysis {

struct TrafficRow {
  DestinationKey key;
  std::size_t devices = 0;
  /// "NTP" for UDP/123, otherwise the transport.
  std::string protocol;
  std::optional<std::uint16_t> port;
  double share_percent = 0;
};

/// Delivered bytes per key pooled over persisted window summaries.
capture::TrafficTotals TotalsFromWindows(
    std::span<const orchestrator::WindowSummary> windows);

/// One row per destination that is BLOCKABLE_ALL for every device contacting
/// it, in first-seen order over `classifications`. A share is the key's bytes
/// over the pooled bytes of every window of the devices contacting it.
/// Throws kUndefinedShare when those devices captured no bytes.
std::vector<TrafficRow> CharacterizeTraffic(
    std::span<const Classification> classifications,
    std::span<const orchestrator::WindowSummary> windows);

}  // namespace iotrim::analysis
