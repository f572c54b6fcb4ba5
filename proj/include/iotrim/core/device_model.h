#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/core/destination.h"

namespace iotrim {

enum class NetworkMode : std::uint8_t { kLan, kWan };
enum class DeviceCategory : std::uint8_t { kBulb, kCamera, kHub, kOther };

std::string_view ToString(NetworkMode mode);
NetworkMode ParseNetworkMode(std::string_view text);
std::string_view ToString(DeviceCategory category);
DeviceCategory ParseDeviceCategory(std::string_view text);

struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static MacAddress Parse(std::string_view text);
  std::string ToString() const;
  friend bool operator==(const MacAddress&, const MacAddress&) = default;
};

/// Lab epochs in which a contact or criticality applies: [from, until).
struct EpochGate {
  int from = 0;
  std::optional<int> until;

  bool Active(int epoch) const {
    return epoch >= from && (!until || epoch < *until);
  }
};

/// (field, value) written into the device state surface, plus the value the
/// field holds right after power-on.
struct StateEffect {
  std::string field;
  std::string value;
  std::string initial;
};

struct ContactSpec {
  DestinationKey destination;
  /// Periodic when set; one-shot otherwise.
  std::optional<double> interval;
  std::uint64_t bytes_per_contact = 0;
  /// DNS lookup only; no connection follows.
  bool resolve_only = false;
  /// Boot contacts only: skipped unless the device was off at least this long.
  double min_off_duration = 0;
  /// Applied to the state surface whenever the contact is delivered.
  std::optional<StateEffect> on_success;
  EpochGate epochs;
};

struct CriticalEntry {
  DestinationKey destination;
  EpochGate epochs;
};

struct FunctionalitySpec {
  std::string name;
  std::vector<NetworkMode> modes;
  std::map<NetworkMode, std::vector<ContactSpec>> contacts;
  /// Hidden ground truth: destinations that must be reachable for success.
  std::map<NetworkMode, std::vector<CriticalEntry>> critical;
  StateEffect state_effect;
  /// Virtual seconds between trigger and the completion event on success.
  double latency = 2.0;

  bool Supports(NetworkMode mode) const;
  const std::vector<ContactSpec>& ContactsFor(NetworkMode mode) const;
  std::vector<DestinationKey> CriticalFor(NetworkMode mode, int epoch) const;
};

struct DeviceModel {
  std::string id;
  std::string label;
  DeviceCategory category = DeviceCategory::kOther;
  MacAddress mac;
  std::vector<ContactSpec> boot_contacts;
  std::vector<FunctionalitySpec> functionalities;

  /// Throws kNotFound.
  const FunctionalitySpec& Functionality(std::string_view name) const;
  /// Every field written by a state effect, sorted.
  std::vector<std::string> StateFields() const;
  std::map<std::string, std::string> InitialState() const;
  /// Boot and functionality destinations in declaration order, deduplicated.
  std::vector<DestinationKey> DeclaredDestinations() const;

  /// Checks the cross-field invariants; throws kValidation.
  void Validate() const;
};

/// Strict JSON-compatible device model: unknown keys are rejected.
DeviceModel ParseDeviceModel(std::string_view text);
DeviceModel LoadDeviceModel(const std::filesystem::path& path);
std::string SerializeDeviceModel(const DeviceModel& model);

}  // namespace iotrim
