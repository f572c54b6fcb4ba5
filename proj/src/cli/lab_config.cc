#include "iotrim/cli/lab_config.h"

#include <set>

#include "core/json_codec.h"
#include "iotrim/error.h"

namespace iotrim::cli {

using json_codec::json;

LabConfig ParseLabConfig(std::string_view text, const std::filesystem::path& base_dir) {
  constexpr std::string_view kContext = "lab config";
  const json j = json_codec::ParseText(text, kContext);
  json_codec::RequireOnlyKeys(
      j, {"devices", "zone", "ownership", "campaign", "scale", "output"}, kContext);
  LabConfig c;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  for (const json& d : json_codec::Required(j, "devices", kContext)) {
    if (!d.is_string()) {
      throw Error(ErrorCode::kValidation, "lab config: device paths must be strings");
    }
    c.devices.push_back(resolve(d.get<std::string>()));
  }
  c.zone = resolve(json_codec::RequiredString(j, "zone", kContext));
  c.ownership = resolve(json_codec::RequiredString(j, "ownership", kContext));
  c.campaign = resolve(json_codec::RequiredString(j, "campaign", kContext));
  if (j.contains("scale")) c.scale = json_codec::RequiredNumber(j, "scale", kContext);
  if (j.contains("output")) c.output = json_codec::RequiredString(j, "output", kContext);
  if (c.scale <= 0) throw Error(ErrorCode::kValidation, "lab config: scale must be > 0");
  return c;
}

LabConfig LoadLabConfig(const std::filesystem::path& path) {
  const std::string text = json_codec::ReadFile(path, "lab config");
  try {
    return ParseLabConfig(text, path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

const DeviceModel* LoadedLab::Find(std::string_view id) const {
  for (const auto& m : models) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

LoadedLab LoadLab(const LabConfig& config) {
  LoadedLab lab{config, {}, dnsctl::Zone::Load(config.zone),
                analysis::OwnershipTable::Load(config.ownership),
                orchestrator::LoadCampaignConfig(config.campaign)};
  std::set<std::string> ids;
  for (const auto& path : config.devices) {
    DeviceModel model = LoadDeviceModel(path);
    if (!ids.insert(model.id).second) {
      throw Error(ErrorCode::kValidation, "duplicate device id '" + model.id + "'");
    }
    for (const auto& key : model.DeclaredDestinations()) {
      if (!key.is_ip_literal() && !lab.zone.Find(key.name())) {
        throw Error(ErrorCode::kValidation, path.string() + ": destination '" +
                                                key.name() + "' is not in the zone");
      }
    }
    lab.models.push_back(std::move(model));
  }
  return lab;
}

}  // namespace iotrim::cli
