#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "iotrim/analysis/ownership.h"
#include "iotrim/core/device_model.h"
#include "iotrim/dnsctl/zone.h"
#include "iotrim/orchestrator/campaign.h"

namespace iotrim::cli {

/// Fixture paths are relative to the config file; `output` is relative to
/// the working directory.
struct LabConfig {
  std::vector<std::filesystem::path> devices;
  std::filesystem::path zone;
  std::filesystem::path ownership;
  std::filesystem::path campaign;
  double scale = 0.001;
  std::filesystem::path output = "out";
};

LabConfig ParseLabConfig(std::string_view text, const std::filesystem::path& base_dir);
LabConfig LoadLabConfig(const std::filesystem::path& path);

/// Everything a run needs, parsed and cross-checked up front.
struct LoadedLab {
  LabConfig config;
  std::vector<DeviceModel> models;
  dnsctl::Zone zone;
  analysis::OwnershipTable ownership;
  orchestrator::CampaignConfig campaign;

  const DeviceModel* Find(std::string_view id) const;
};

/// Throws kIo for unreadable files and kValidation for fixtures that do not
/// parse, duplicate device ids, or named destinations missing from the zone.
LoadedLab LoadLab(const LabConfig& config);

}  // namespace iotrim::cli
