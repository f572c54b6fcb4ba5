#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iotrim/capture/capture.h"
#include "iotrim/core/device_model.h"
#include "iotrim/dnsctl/zone.h"
#include "iotrim/orchestrator/campaign.h"

namespace iotrim::orchestrator {

struct BatchOptions {
  dnsctl::Zone zone;
  CampaignConfig config;
  double scale = netlab::VirtualClock::kDefaultScale;
  std::uint64_t seed = 0;
  /// Lab epoch index and the label written to the ledger.
  int epoch = 0;
  std::string epoch_label = "0";
  /// Run the DNS-behavior sweep first and let it set the off duration.
  bool sweep_first = false;
  /// Shared by every device; callbacks may run on worker threads.
  CampaignHooks hooks;
};

struct BatchOutcome {
  CampaignResult result;
  std::optional<SweepReport> sweep;
  std::vector<capture::FlowRecord> flows;
  std::vector<capture::DnsEvent> dns;
};

/// Seed of the i-th device lab, derived from the batch seed.
std::uint64_t DeviceSeed(std::uint64_t seed, std::size_t index);

/// Reference implementation: one device campaign after another.
std::vector<BatchOutcome> RunCampaignsSerial(const std::vector<DeviceModel>& models,
                                             const BatchOptions& options);
/// One lab per device, campaigns run concurrently on an OpenMP team. Results
/// equal the serial ones; wall time is bounded by the slowest device.
std::vector<BatchOutcome> RunCampaigns(const std::vector<DeviceModel>& models,
                                       const BatchOptions& options);

std::vector<SweepReport> RunSweepsSerial(const std::vector<DeviceModel>& models,
                                         const BatchOptions& options);
std::vector<SweepReport> RunSweeps(const std::vector<DeviceModel>& models,
                                   const BatchOptions& options);

}  // namespace iotrim::orchestrator
