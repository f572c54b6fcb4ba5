#include "core/json_codec.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace iotrim::json_codec {

void RequireOnlyKeys(const json& object,
                     std::initializer_list<std::string_view> allowed,
                     std::string_view context) {
  if (!object.is_object()) {
    throw Error(ErrorCode::kValidation,
                std::string(context) + ": expected an object");
  }
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kValidation,
                  std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

const json& Required(const json& object, std::string_view key,
                     std::string_view context) {
  auto it = object.find(key);
  if (it == object.end()) {
    throw Error(ErrorCode::kValidation, std::string(context) +
                                            ": missing key '" +
                                            std::string(key) + "'");
  }
  return *it;
}

std::string RequiredString(const json& object, std::string_view key,
                           std::string_view context) {
  const json& value = Required(object, key, context);
  if (!value.is_string()) {
    throw Error(ErrorCode::kValidation, std::string(context) + ": '" +
                                            std::string(key) +
                                            "' must be a string");
  }
  return value.get<std::string>();
}

double RequiredNumber(const json& object, std::string_view key,
                      std::string_view context) {
  const json& value = Required(object, key, context);
  if (!value.is_number()) {
    throw Error(ErrorCode::kValidation, std::string(context) + ": '" +
                                            std::string(key) +
                                            "' must be a number");
  }
  return value.get<double>();
}

DestinationKey KeyFromJson(const json& object, std::string_view context,
                           std::initializer_list<std::string_view> extra_keys) {
  if (!object.is_object()) {
    throw Error(ErrorCode::kValidation,
                std::string(context) + ": destination must be an object");
  }
  for (const auto& [key, value] : object.items()) {
    if (key == "name" || key == "ip" || key == "transport" || key == "port") {
      continue;
    }
    if (std::find(extra_keys.begin(), extra_keys.end(), key) ==
        extra_keys.end()) {
      throw Error(ErrorCode::kValidation,
                  std::string(context) + ": unknown key '" + key + "'");
    }
  }
  const bool has_name = object.contains("name");
  const bool has_ip = object.contains("ip");
  if (has_name == has_ip) {
    throw Error(ErrorCode::kValidation,
                std::string(context) +
                    ": destination needs exactly one of 'name' or 'ip'");
  }
  const Transport transport =
      ParseTransport(RequiredString(object, "transport", context));
  std::optional<std::uint16_t> port;
  if (auto it = object.find("port"); it != object.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 0 ||
        it->get<long long>() > 65535) {
      throw Error(ErrorCode::kValidation,
                  std::string(context) + ": port must be an integer 0-65535");
    }
    if (transport == Transport::kIcmp) {
      throw Error(ErrorCode::kValidation,
                  std::string(context) + ": ICMP destinations carry no port");
    }
    port = static_cast<std::uint16_t>(it->get<int>());
  }
  if (has_ip) {
    return DestinationKey::ForAddress(
        Ipv4::Parse(RequiredString(object, "ip", context)), transport, port);
  }
  return DestinationKey::ForName(RequiredString(object, "name", context),
                                 transport, port);
}

json KeyToJson(const DestinationKey& key) {
  json out = json::object();
  out[key.is_ip_literal() ? "ip" : "name"] = key.name();
  out["transport"] = std::string(ToString(key.transport()));
  if (key.port()) out["port"] = *key.port();
  return out;
}

json ClassificationToJson(const Classification& classification) {
  json entries = json::array();
  for (const auto& entry : classification.entries) {
    json e = KeyToJson(entry.key);
    e["verdict"] = std::string(ToString(entry.verdict));
    e["evidence"] = entry.evidence;
    entries.push_back(std::move(e));
  }
  return json{{"type", "classification"},
              {"device", classification.device},
              {"epoch", classification.epoch},
              {"entries", std::move(entries)}};
}

Classification ClassificationFromJson(const json& object) {
  constexpr std::string_view kContext = "classification";
  RequireOnlyKeys(object, {"type", "device", "epoch", "entries"}, kContext);
  Classification out;
  out.device = RequiredString(object, "device", kContext);
  out.epoch = RequiredString(object, "epoch", kContext);
  for (const json& e : Required(object, "entries", kContext)) {
    ClassificationEntry entry;
    entry.key = KeyFromJson(e, kContext, {"verdict", "evidence"});
    entry.verdict = ParseVerdict(RequiredString(e, "verdict", kContext));
    entry.evidence = Required(e, "evidence", kContext)
                         .get<std::vector<std::string>>();
    out.entries.push_back(std::move(entry));
  }
  return out;
}

std::string ReadFile(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo,
                "cannot read " + std::string(what) + " " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json ParseText(std::string_view text, std::string_view context) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string(context) + ": " + e.what());
  }
}

}  // namespace iotrim::json_codec
