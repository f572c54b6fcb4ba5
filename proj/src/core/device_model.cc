#include "iotrim/core/device_model.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/json_codec.h"
#include "iotrim/error.h"

namespace iotrim {
namespace {

using json_codec::json;

std::string Lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

StateEffect EffectFromJson(const json& j, std::string_view context) {
  json_codec::RequireOnlyKeys(j, {"field", "value", "initial"}, context);
  StateEffect effect;
  effect.field = json_codec::RequiredString(j, "field", context);
  effect.value = json_codec::RequiredString(j, "value", context);
  effect.initial = json_codec::RequiredString(j, "initial", context);
  if (effect.field.empty()) {
    throw Error(ErrorCode::kValidation,
                std::string(context) + ": empty state field name");
  }
  return effect;
}

json EffectToJson(const StateEffect& effect) {
  return json{{"field", effect.field},
              {"value", effect.value},
              {"initial", effect.initial}};
}

EpochGate GateFromJson(const json& j, std::string_view context) {
  json_codec::RequireOnlyKeys(j, {"from", "until"}, context);
  EpochGate gate;
  if (j.contains("from")) gate.from = j.at("from").get<int>();
  if (j.contains("until")) gate.until = j.at("until").get<int>();
  return gate;
}

json GateToJson(const EpochGate& gate) {
  json j{{"from", gate.from}};
  if (gate.until) j["until"] = *gate.until;
  return j;
}

bool IsDefaultGate(const EpochGate& gate) {
  return gate.from == 0 && !gate.until;
}

ContactSpec ContactFromJson(const json& j, std::string_view context) {
  ContactSpec contact;
  contact.destination = json_codec::KeyFromJson(
      j, context,
      {"bytes", "every", "resolve_only", "min_off", "sets", "epochs"});
  if (auto it = j.find("bytes"); it != j.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 0) {
      throw Error(ErrorCode::kValidation,
                  std::string(context) + ": bytes must be a non-negative integer");
    }
    contact.bytes_per_contact = it->get<std::uint64_t>();
  }
  if (auto it = j.find("every"); it != j.end()) {
    contact.interval = it->get<double>();
  }
  if (auto it = j.find("resolve_only"); it != j.end()) {
    contact.resolve_only = it->get<bool>();
  }
  if (auto it = j.find("min_off"); it != j.end()) {
    contact.min_off_duration = it->get<double>();
  }
  if (auto it = j.find("sets"); it != j.end()) {
    contact.on_success = EffectFromJson(*it, context);
  }
  if (auto it = j.find("epochs"); it != j.end()) {
    contact.epochs = GateFromJson(*it, context);
  }
  return contact;
}

json ContactToJson(const ContactSpec& contact) {
  json j = json_codec::KeyToJson(contact.destination);
  j["bytes"] = contact.bytes_per_contact;
  if (contact.interval) j["every"] = *contact.interval;
  if (contact.resolve_only) j["resolve_only"] = true;
  if (contact.min_off_duration > 0) j["min_off"] = contact.min_off_duration;
  if (contact.on_success) j["sets"] = EffectToJson(*contact.on_success);
  if (!IsDefaultGate(contact.epochs)) j["epochs"] = GateToJson(contact.epochs);
  return j;
}

FunctionalitySpec FunctionalityFromJson(const json& j) {
  constexpr std::string_view kContext = "functionality";
  json_codec::RequireOnlyKeys(
      j, {"name", "modes", "contacts", "critical", "state_effect", "latency"},
      kContext);
  FunctionalitySpec spec;
  spec.name = json_codec::RequiredString(j, "name", kContext);
  const std::string context = "functionality '" + spec.name + "'";
  for (const json& mode : json_codec::Required(j, "modes", context)) {
    spec.modes.push_back(ParseNetworkMode(mode.get<std::string>()));
  }
  if (auto it = j.find("contacts"); it != j.end()) {
    for (const auto& [mode, list] : it->items()) {
      auto& contacts = spec.contacts[ParseNetworkMode(mode)];
      for (const json& c : list) contacts.push_back(ContactFromJson(c, context));
    }
  }
  if (auto it = j.find("critical"); it != j.end()) {
    for (const auto& [mode, list] : it->items()) {
      auto& critical = spec.critical[ParseNetworkMode(mode)];
      for (const json& c : list) {
        CriticalEntry entry;
        entry.destination = json_codec::KeyFromJson(c, context, {"epochs"});
        if (c.contains("epochs")) entry.epochs = GateFromJson(c.at("epochs"), context);
        critical.push_back(std::move(entry));
      }
    }
  }
  spec.state_effect =
      EffectFromJson(json_codec::Required(j, "state_effect", context), context);
  if (auto it = j.find("latency"); it != j.end()) spec.latency = it->get<double>();
  return spec;
}

json FunctionalityToJson(const FunctionalitySpec& spec) {
  json modes = json::array();
  for (NetworkMode m : spec.modes) modes.push_back(std::string(ToString(m)));
  json contacts = json::object();
  for (const auto& [mode, list] : spec.contacts) {
    json arr = json::array();
    for (const auto& c : list) arr.push_back(ContactToJson(c));
    contacts[std::string(ToString(mode))] = std::move(arr);
  }
  json critical = json::object();
  for (const auto& [mode, list] : spec.critical) {
    json arr = json::array();
    for (const auto& entry : list) {
      json e = json_codec::KeyToJson(entry.destination);
      if (!IsDefaultGate(entry.epochs)) e["epochs"] = GateToJson(entry.epochs);
      arr.push_back(std::move(e));
    }
    critical[std::string(ToString(mode))] = std::move(arr);
  }
  return json{{"name", spec.name},
              {"modes", std::move(modes)},
              {"contacts", std::move(contacts)},
              {"critical", std::move(critical)},
              {"state_effect", EffectToJson(spec.state_effect)},
              {"latency", spec.latency}};
}

void Fail(const DeviceModel& model, const std::string& what) {
  throw Error(ErrorCode::kValidation, "device '" + model.id + "': " + what);
}

void ValidateContact(const DeviceModel& model, const ContactSpec& contact) {
  if (contact.interval && *contact.interval <= 0) {
    Fail(model, "periodic interval for " + contact.destination.ToString() +
                    " must be > 0");
  }
  if (contact.min_off_duration < 0) {
    Fail(model, "min_off must be >= 0");
  }
  if (contact.resolve_only && contact.destination.is_ip_literal()) {
    Fail(model, "resolve_only contact needs a DNS name");
  }
}

}  // namespace

std::string_view ToString(NetworkMode mode) {
  return mode == NetworkMode::kLan ? "LAN" : "WAN";
}

NetworkMode ParseNetworkMode(std::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "lan") return NetworkMode::kLan;
  if (lower == "wan") return NetworkMode::kWan;
  throw Error(ErrorCode::kValidation, "unknown network mode '" + std::string(text) + "'");
}

std::string_view ToString(DeviceCategory category) {
  switch (category) {
    case DeviceCategory::kBulb: return "bulb";
    case DeviceCategory::kCamera: return "camera";
    case DeviceCategory::kHub: return "hub";
    case DeviceCategory::kOther: return "other";
  }
  return "other";
}

DeviceCategory ParseDeviceCategory(std::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "bulb") return DeviceCategory::kBulb;
  if (lower == "camera") return DeviceCategory::kCamera;
  if (lower == "hub") return DeviceCategory::kHub;
  if (lower == "other") return DeviceCategory::kOther;
  throw Error(ErrorCode::kValidation, "unknown category '" + std::string(text) + "'");
}

MacAddress MacAddress::Parse(std::string_view text) {
  MacAddress mac;
  if (text.size() != 17) {
    throw Error(ErrorCode::kValidation, "malformed MAC '" + std::string(text) + "'");
  }
  for (int i = 0; i < 6; ++i) {
    if (i > 0 && text[i * 3 - 1] != ':' && text[i * 3 - 1] != '-') {
      throw Error(ErrorCode::kValidation, "malformed MAC '" + std::string(text) + "'");
    }
    unsigned value = 0;
    for (int k = 0; k < 2; ++k) {
      const char c = text[i * 3 + k];
      value <<= 4;
      if (c >= '0' && c <= '9') value |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') value |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') value |= static_cast<unsigned>(c - 'A' + 10);
      else throw Error(ErrorCode::kValidation, "malformed MAC '" + std::string(text) + "'");
    }
    mac.octets[i] = static_cast<std::uint8_t>(value);
  }
  return mac;
}

std::string MacAddress::ToString() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0],
                octets[1], octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

bool FunctionalitySpec::Supports(NetworkMode mode) const {
  return std::find(modes.begin(), modes.end(), mode) != modes.end();
}

const std::vector<ContactSpec>& FunctionalitySpec::ContactsFor(
    NetworkMode mode) const {
  static const std::vector<ContactSpec> kNone;
  auto it = contacts.find(mode);
  return it == contacts.end() ? kNone : it->second;
}

std::vector<DestinationKey> FunctionalitySpec::CriticalFor(NetworkMode mode,
                                                           int epoch) const {
  std::vector<DestinationKey> out;
  auto it = critical.find(mode);
  if (it == critical.end()) return out;
  for (const auto& entry : it->second) {
    if (entry.epochs.Active(epoch)) out.push_back(entry.destination);
  }
  return out;
}

const FunctionalitySpec& DeviceModel::Functionality(std::string_view name) const {
  for (const auto& f : functionalities) {
    if (f.name == name) return f;
  }
  throw Error(ErrorCode::kNotFound, "device '" + id +
                                        "' has no functionality '" +
                                        std::string(name) + "'");
}

std::vector<std::string> DeviceModel::StateFields() const {
  std::set<std::string> fields;
  for (const auto& [field, initial] : InitialState()) fields.insert(field);
  return {fields.begin(), fields.end()};
}

std::map<std::string, std::string> DeviceModel::InitialState() const {
  std::map<std::string, std::string> state;
  auto add = [&](const StateEffect& e) { state.emplace(e.field, e.initial); };
  for (const auto& c : boot_contacts) {
    if (c.on_success) add(*c.on_success);
  }
  for (const auto& f : functionalities) {
    add(f.state_effect);
    for (const auto& [mode, list] : f.contacts) {
      for (const auto& c : list) {
        if (c.on_success) add(*c.on_success);
      }
    }
  }
  return state;
}

std::vector<DestinationKey> DeviceModel::DeclaredDestinations() const {
  std::vector<DestinationKey> out;
  auto add = [&](const DestinationKey& key) {
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
  };
  for (const auto& c : boot_contacts) add(c.destination);
  for (const auto& f : functionalities) {
    for (NetworkMode mode : f.modes) {
      for (const auto& c : f.ContactsFor(mode)) add(c.destination);
    }
  }
  return out;
}

void DeviceModel::Validate() const {
  if (id.empty()) Fail(*this, "empty id");
  std::map<std::string, std::string> initial_by_field;
  auto check_effect = [&](const StateEffect& e) {
    auto [it, inserted] = initial_by_field.emplace(e.field, e.initial);
    if (!inserted && it->second != e.initial) {
      Fail(*this, "conflicting initial values for state field '" + e.field + "'");
    }
  };
  for (const auto& c : boot_contacts) {
    ValidateContact(*this, c);
    if (c.on_success) check_effect(*c.on_success);
  }
  std::set<std::string> names;
  for (const auto& f : functionalities) {
    if (!names.insert(f.name).second) {
      Fail(*this, "duplicate functionality '" + f.name + "'");
    }
    if (f.modes.empty()) Fail(*this, "functionality '" + f.name + "' has no modes");
    if (f.latency < 0) Fail(*this, "negative latency for '" + f.name + "'");
    if (f.state_effect.value == f.state_effect.initial) {
      Fail(*this, "functionality '" + f.name +
                      "' state effect does not change its field");
    }
    check_effect(f.state_effect);
    for (const auto& [mode, list] : f.contacts) {
      if (!f.Supports(mode)) {
        Fail(*this, "contacts for undeclared mode " + std::string(ToString(mode)));
      }
      for (const auto& c : list) {
        ValidateContact(*this, c);
        if (c.interval) {
          Fail(*this, "functionality contacts must be one-shot");
        }
        if (c.min_off_duration > 0) {
          Fail(*this, "min_off applies to boot contacts only");
        }
        if (c.on_success) check_effect(*c.on_success);
      }
    }
    for (const auto& [mode, list] : f.critical) {
      if (!f.Supports(mode)) {
        Fail(*this, "critical set for undeclared mode " + std::string(ToString(mode)));
      }
      for (const auto& entry : list) {
        auto declared = [&](const ContactSpec& c) {
          return !c.resolve_only && c.destination == entry.destination;
        };
        const auto& fc = f.ContactsFor(mode);
        if (std::none_of(boot_contacts.begin(), boot_contacts.end(), declared) &&
            std::none_of(fc.begin(), fc.end(), declared)) {
          Fail(*this, "critical destination " + entry.destination.ToString() +
                          " is not contacted by boot or '" + f.name + "' in " +
                          std::string(ToString(mode)));
        }
      }
    }
  }
}

DeviceModel ParseDeviceModel(std::string_view text) {
  const json j = json_codec::ParseText(text, "device model");
  constexpr std::string_view kContext = "device model";
  json_codec::RequireOnlyKeys(
      j, {"id", "label", "category", "mac", "boot_contacts", "functionalities"},
      kContext);
  DeviceModel model;
  model.id = json_codec::RequiredString(j, "id", kContext);
  model.label = json_codec::RequiredString(j, "label", kContext);
  model.category =
      ParseDeviceCategory(json_codec::RequiredString(j, "category", kContext));
  model.mac = MacAddress::Parse(json_codec::RequiredString(j, "mac", kContext));
  for (const json& c : json_codec::Required(j, "boot_contacts", kContext)) {
    model.boot_contacts.push_back(ContactFromJson(c, "boot contact"));
  }
  for (const json& f : json_codec::Required(j, "functionalities", kContext)) {
    model.functionalities.push_back(FunctionalityFromJson(f));
  }
  model.Validate();
  return model;
}

DeviceModel LoadDeviceModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read device model " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseDeviceModel(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string SerializeDeviceModel(const DeviceModel& model) {
  json boot = json::array();
  for (const auto& c : model.boot_contacts) boot.push_back(ContactToJson(c));
  json funcs = json::array();
  for (const auto& f : model.functionalities) funcs.push_back(FunctionalityToJson(f));
  json j{{"id", model.id},
         {"label", model.label},
         {"category", std::string(ToString(model.category))},
         {"mac", model.mac.ToString()},
         {"boot_contacts", std::move(boot)},
         {"functionalities", std::move(funcs)}};
  return j.dump(2);
}

}  // namespace iotrim
