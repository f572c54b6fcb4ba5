#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/capture/capture.h"
#include "iotrim/core/device_model.h"
#include "iotrim/dnsctl/resolver.h"
#include "iotrim/dnsctl/zone.h"
#include "iotrim/netlab/virtual_clock.h"

namespace iotrim::netlab {

enum class Power : std::uint8_t { kOn, kOff };

/// Values of (a crop of) a device's state surface at one instant.
struct StateSnapshot {
  std::string device;
  std::map<std::string, std::string> fields;
  double taken_at = 0;
};

/// Emitted when a triggered functionality finishes, successfully or not.
struct CompletionEvent {
  std::uint64_t trigger_id = 0;
  std::string device;
  std::string functionality;
  NetworkMode mode = NetworkMode::kLan;
  double t = 0;
  bool success = false;
};

/// Test-only fault injection.
struct DeviceFault {
  /// Functionalities complete but never apply their state effect.
  bool functionality_broken = false;
  /// Triggers are accepted but nothing happens and no completion arrives.
  bool unresponsive = false;
  /// The next N snapshots fail with kUnavailable.
  int probe_failures = 0;
};

struct LabOptions {
  double scale = VirtualClock::kDefaultScale;
  std::uint64_t seed = 0;
  /// Longitudinal epoch index; gates epoch-dependent contacts.
  int epoch = 0;
};

/// Emulated LAN: devices on a virtual clock resolving through a per-device
/// view resolver (over the DNS wire format) and emitting flows into a
/// capture log. All commands are serialized on one lock.
class Lab {
 public:
  Lab(std::vector<DeviceModel> models, dnsctl::Zone zone, LabOptions options = {});

  Lab(const Lab&) = delete;
  Lab& operator=(const Lab&) = delete;

  const DeviceModel& Model(std::string_view device) const;
  std::vector<std::string> DeviceIds() const;
  Power power(std::string_view device) const;
  std::uint64_t power_epoch(std::string_view device) const;
  std::optional<NetworkMode> network_mode(std::string_view device) const;
  double now() const;
  int epoch() const { return options_.epoch; }
  double scale() const { return options_.scale; }

  dnsctl::Resolver& resolver() { return resolver_; }
  const dnsctl::Resolver& resolver() const { return resolver_; }
  capture::Capture& capture() { return capture_; }
  const capture::Capture& capture() const { return capture_; }

  /// Turns the device off now and schedules power-on after `duration`. On
  /// power-on the device runs its boot contacts.
  void PowerOff(std::string_view device, double duration);
  /// Boots immediately (no-op when already on).
  void PowerOn(std::string_view device);

  /// Starts a functionality through the companion probe placed in `mode`.
  /// Returns a trigger id for WaitForCompletion.
  std::uint64_t TriggerFunctionality(std::string_view device,
                                     std::string_view functionality,
                                     NetworkMode mode);
  /// Advances the clock until the trigger's completion event or `timeout`.
  std::optional<CompletionEvent> WaitForCompletion(std::uint64_t trigger_id,
                                                   double timeout);

  /// Current values of `fields` (all fields when omitted).
  StateSnapshot Snapshot(std::string_view device,
                         const std::optional<std::vector<std::string>>& fields =
                             std::nullopt);

  /// Ground-truth hook for test harnesses: would a contact from `device` to
  /// `destination` currently succeed given the active rules?
  bool Reachable(std::string_view device, const DestinationKey& destination) const;

  /// Processes every scheduled event up to and including now + seconds.
  void Advance(double seconds);
  /// Processes events strictly before now + seconds, then moves the clock
  /// there; events due exactly at the target stay pending.
  void AdvanceBefore(double seconds);

  std::uint64_t OpenWindow(std::string_view device);
  capture::CaptureWindow CloseWindow(std::uint64_t window_id);

  void SetFault(std::string_view device, DeviceFault fault);

 private:
  enum class EventKind : std::uint8_t { kPowerOn, kPeriodic, kCompletion };

  struct Scheduled {
    double t;
    std::uint64_t seq;
    std::size_t device;
    EventKind kind;
    std::uint64_t power_epoch;  // periodic/completion validity
    std::size_t contact;        // periodic: boot contact index
    std::uint64_t trigger;      // completion

    bool operator>(const Scheduled& o) const {
      return t != o.t ? t > o.t : seq > o.seq;
    }
  };

  struct PendingCompletion {
    CompletionEvent event;
    StateEffect effect;
  };

  struct DeviceInstance {
    DeviceModel model;
    Power power = Power::kOff;
    double off_since;
    std::uint64_t power_epoch = 0;
    std::uint64_t power_on_seq = 0;  // the pending power-on event, 0 if none
    std::map<std::string, std::string> state;
    std::optional<NetworkMode> network_mode;
    DeviceFault fault;
  };

  std::size_t IndexOf(std::string_view device) const;
  void Schedule(Scheduled event);
  void RunUntil(double target, bool inclusive);
  void Process(const Scheduled& event);
  void Boot(std::size_t device);
  bool ExecuteContact(std::size_t device, const ContactSpec& contact);

  LabOptions options_;
  VirtualClock clock_;
  dnsctl::Resolver resolver_;
  capture::Capture capture_;
  std::vector<DeviceInstance> devices_;
  std::map<std::string, std::size_t, std::less<>> index_;

  std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_trigger_ = 1;
  std::uint16_t next_query_id_ = 1;
  std::map<std::uint64_t, PendingCompletion> pending_;
  std::map<std::uint64_t, CompletionEvent> completed_;

  mutable std::mutex mu_;
};

}  // namespace iotrim::netlab
