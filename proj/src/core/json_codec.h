#pragma once

// Shared JSON helpers for the structured-text formats (device models, zone
// files, ledgers). Internal to the library.

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "iotrim/core/classification.h"
#include "iotrim/core/destination.h"
#include "iotrim/error.h"
#include "json.hpp"

namespace iotrim::json_codec {

using nlohmann::json;

/// Throws kValidation naming the first key not in `allowed`.
void RequireOnlyKeys(const json& object,
                     std::initializer_list<std::string_view> allowed,
                     std::string_view context);

const json& Required(const json& object, std::string_view key,
                     std::string_view context);

std::string RequiredString(const json& object, std::string_view key,
                           std::string_view context);
double RequiredNumber(const json& object, std::string_view key,
                      std::string_view context);

/// {"name": ..., "transport": ..., "port": ...} or {"ip": ..., ...}.
DestinationKey KeyFromJson(const json& object, std::string_view context,
                           std::initializer_list<std::string_view> extra_keys = {});
json KeyToJson(const DestinationKey& key);

json ClassificationToJson(const Classification& classification);
Classification ClassificationFromJson(const json& object);

/// Whole file contents; throws kIo naming `what`.
std::string ReadFile(const std::filesystem::path& path, std::string_view what);

/// Parses `text`, mapping library exceptions to kParse.
json ParseText(std::string_view text, std::string_view context);

}  // namespace iotrim::json_codec
