#include "iotrim/netlab/lab.h"

#include <algorithm>
#include <limits>
#include <set>

#include "iotrim/dnsctl/wire.h"
#include "iotrim/error.h"

namespace iotrim::netlab {

Lab::Lab(std::vector<DeviceModel> models, dnsctl::Zone zone, LabOptions options)
    : options_(options),
      clock_(options.scale),
      resolver_(std::move(zone), options.seed, [this] { return clock_.now(); }) {
  for (auto& model : models) {
    model.Validate();
    if (index_.contains(model.id)) {
      throw Error(ErrorCode::kDuplicate, "duplicate device id '" + model.id + "'");
    }
    index_.emplace(model.id, devices_.size());
    DeviceInstance instance;
    instance.model = std::move(model);
    instance.off_since = -std::numeric_limits<double>::infinity();
    devices_.push_back(std::move(instance));
  }
}

std::size_t Lab::IndexOf(std::string_view device) const {
  auto it = index_.find(device);
  if (it == index_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown device '" + std::string(device) + "'");
  }
  return it->second;
}

const DeviceModel& Lab::Model(std::string_view device) const {
  return devices_[IndexOf(device)].model;
}

std::vector<std::string> Lab::DeviceIds() const {
  std::vector<std::string> ids;
  for (const auto& d : devices_) ids.push_back(d.model.id);
  return ids;
}

Power Lab::power(std::string_view device) const {
  std::lock_guard lock(mu_);
  return devices_[IndexOf(device)].power;
}

std::uint64_t Lab::power_epoch(std::string_view device) const {
  std::lock_guard lock(mu_);
  return devices_[IndexOf(device)].power_epoch;
}

std::optional<NetworkMode> Lab::network_mode(std::string_view device) const {
  std::lock_guard lock(mu_);
  return devices_[IndexOf(device)].network_mode;
}

double Lab::now() const {
  std::lock_guard lock(mu_);
  return clock_.now();
}

void Lab::Schedule(Scheduled event) {
  event.seq = next_seq_++;
  queue_.push(event);
}

void Lab::PowerOff(std::string_view device, double duration) {
  if (duration < 0) {
    throw Error(ErrorCode::kValidation, "power-off duration must be >= 0");
  }
  std::lock_guard lock(mu_);
  const std::size_t idx = IndexOf(device);
  DeviceInstance& d = devices_[idx];
  if (d.power == Power::kOn) {
    d.power = Power::kOff;
    d.off_since = clock_.now();
    d.state.clear();
  }
  Scheduled boot{clock_.now() + duration, 0, idx, EventKind::kPowerOn, 0, 0, 0};
  Schedule(boot);
  d.power_on_seq = next_seq_ - 1;
}

void Lab::PowerOn(std::string_view device) {
  std::lock_guard lock(mu_);
  const std::size_t idx = IndexOf(device);
  if (devices_[idx].power == Power::kOn) return;
  Boot(idx);
}

void Lab::Boot(std::size_t idx) {
  DeviceInstance& d = devices_[idx];
  const double t = clock_.now();
  const double off_for = t - d.off_since;
  d.power = Power::kOn;
  d.power_on_seq = 0;
  ++d.power_epoch;
  d.state = d.model.InitialState();
  d.network_mode.reset();
  for (std::size_t i = 0; i < d.model.boot_contacts.size(); ++i) {
    const ContactSpec& contact = d.model.boot_contacts[i];
    if (!contact.epochs.Active(options_.epoch)) continue;
    if (off_for < contact.min_off_duration) continue;
    ExecuteContact(idx, contact);
    if (contact.interval) {
      Schedule({t + *contact.interval, 0, idx, EventKind::kPeriodic,
                d.power_epoch, i, 0});
    }
  }
}

bool Lab::ExecuteContact(std::size_t idx, const ContactSpec& contact) {
  DeviceInstance& d = devices_[idx];
  const double t = clock_.now();
  const DestinationKey& dest = contact.destination;
  Ipv4 dst;
  if (!dest.is_ip_literal()) {
    const auto query = dns::Encode(dns::MakeQuery(next_query_id_++, dest.name()));
    const dns::Message reply = dns::Decode(resolver_.HandleWire(query, d.model.id));
    const auto answers = dns::AnswerAddresses(reply);
    capture_.Record(d.power_epoch,
                    capture::DnsEvent{d.model.id, t, dest.name(), dns::type::kA,
                                      static_cast<std::uint8_t>(reply.header.rcode),
                                      answers});
    const bool resolved =
        reply.header.rcode == dns::Rcode::kNoError && !answers.empty();
    if (contact.resolve_only) return resolved && !answers.front().is_loopback();
    if (!resolved) return false;
    dst = answers.front();
  } else {
    dst = dest.address();
  }
  const bool dropped = resolver_.IsDropped(d.model.id, dst);
  capture_.Record(d.power_epoch,
                  capture::FlowRecord{d.model.id, dst, dest.port(), dest.transport(),
                                      contact.bytes_per_contact, t, t, !dropped});
  const bool success = !dropped && !dst.is_loopback();
  if (success && contact.on_success) {
    d.state[contact.on_success->field] = contact.on_success->value;
  }
  return success;
}

std::uint64_t Lab::TriggerFunctionality(std::string_view device,
                                        std::string_view functionality,
                                        NetworkMode mode) {
  std::lock_guard lock(mu_);
  const std::size_t idx = IndexOf(device);
  DeviceInstance& d = devices_[idx];
  if (d.power != Power::kOn) {
    throw Error(ErrorCode::kPrecondition,
                "device '" + d.model.id + "' is off; cannot trigger");
  }
  const FunctionalitySpec& spec = d.model.Functionality(functionality);
  if (!spec.Supports(mode)) {
    throw Error(ErrorCode::kNotFound,
                "functionality '" + spec.name + "' is not declared for " +
                    std::string(ToString(mode)));
  }
  const std::uint64_t trigger = next_trigger_++;
  d.network_mode = mode;
  if (d.fault.unresponsive) return trigger;

  std::map<DestinationKey, bool> outcome;
  for (const ContactSpec& contact : spec.ContactsFor(mode)) {
    if (!contact.epochs.Active(options_.epoch)) continue;
    const bool ok = ExecuteContact(idx, contact);
    if (contact.resolve_only) continue;
    auto [it, inserted] = outcome.emplace(contact.destination, ok);
    if (!inserted) it->second = it->second && ok;
  }
  bool success = !d.fault.functionality_broken;
  for (const DestinationKey& critical : spec.CriticalFor(mode, options_.epoch)) {
    auto it = outcome.find(critical);
    if (it == outcome.end()) {
      // Critical boot-time destination: the functionality re-contacts it.
      const auto& boot = d.model.boot_contacts;
      auto c = std::find_if(boot.begin(), boot.end(), [&](const ContactSpec& b) {
        return !b.resolve_only && b.destination == critical;
      });
      const bool ok = c != boot.end() && ExecuteContact(idx, *c);
      it = outcome.emplace(critical, ok).first;
    }
    success = success && it->second;
  }

  CompletionEvent event{trigger, d.model.id, spec.name, mode, clock_.now(), success};
  if (!success) {
    // A critical failure surfaces immediately.
    completed_.emplace(trigger, event);
    return trigger;
  }
  pending_.emplace(trigger, PendingCompletion{event, spec.state_effect});
  Schedule({clock_.now() + spec.latency, 0, idx, EventKind::kCompletion,
            d.power_epoch, 0, trigger});
  return trigger;
}

std::optional<CompletionEvent> Lab::WaitForCompletion(std::uint64_t trigger_id,
                                                      double timeout) {
  std::lock_guard lock(mu_);
  const double deadline = clock_.now() + timeout;
  while (true) {
    if (auto it = completed_.find(trigger_id); it != completed_.end()) {
      return it->second;
    }
    if (queue_.empty() || queue_.top().t > deadline) break;
    RunUntil(queue_.top().t, true);
  }
  RunUntil(deadline, true);
  if (auto it = completed_.find(trigger_id); it != completed_.end()) {
    return it->second;
  }
  return std::nullopt;
}

StateSnapshot Lab::Snapshot(std::string_view device,
                            const std::optional<std::vector<std::string>>& fields) {
  std::lock_guard lock(mu_);
  DeviceInstance& d = devices_[IndexOf(device)];
  if (d.power != Power::kOn) {
    throw Error(ErrorCode::kPrecondition,
                "device '" + d.model.id + "' is off; no state to snapshot");
  }
  if (d.fault.probe_failures > 0) {
    --d.fault.probe_failures;
    throw Error(ErrorCode::kUnavailable, "companion probe for '" + d.model.id +
                                             "' is unreachable");
  }
  StateSnapshot snap{d.model.id, {}, clock_.now()};
  if (!fields) {
    snap.fields = d.state;
    return snap;
  }
  for (const std::string& field : *fields) {
    auto it = d.state.find(field);
    if (it == d.state.end()) {
      throw Error(ErrorCode::kNotFound, "device '" + d.model.id +
                                            "' has no state field '" + field + "'");
    }
    snap.fields.emplace(field, it->second);
  }
  return snap;
}

bool Lab::Reachable(std::string_view device, const DestinationKey& destination) const {
  std::lock_guard lock(mu_);
  const std::string& id = devices_[IndexOf(device)].model.id;
  if (destination.is_ip_literal()) {
    return !resolver_.IsDropped(id, destination.address());
  }
  if (resolver_.IsOverridden(id, destination.name())) return false;
  const dnsctl::ZoneEntry* entry = resolver_.zone().Find(destination.name());
  if (!entry) return false;
  return std::none_of(entry->addresses.begin(), entry->addresses.end(),
                      [&](Ipv4 a) { return resolver_.IsDropped(id, a); });
}

void Lab::Advance(double seconds) {
  std::lock_guard lock(mu_);
  RunUntil(clock_.now() + seconds, true);
}

void Lab::AdvanceBefore(double seconds) {
  std::lock_guard lock(mu_);
  RunUntil(clock_.now() + seconds, false);
}

void Lab::RunUntil(double target, bool inclusive) {
  while (!queue_.empty()) {
    const Scheduled& top = queue_.top();
    if (inclusive ? top.t > target : top.t >= target) break;
    const Scheduled event = top;
    queue_.pop();
    clock_.AdvanceTo(std::max(event.t, clock_.now()));
    Process(event);
  }
  clock_.AdvanceTo(std::max(target, clock_.now()));
}

void Lab::Process(const Scheduled& event) {
  DeviceInstance& d = devices_[event.device];
  switch (event.kind) {
    case EventKind::kPowerOn:
      if (d.power_on_seq == event.seq && d.power == Power::kOff) Boot(event.device);
      break;
    case EventKind::kPeriodic: {
      if (d.power != Power::kOn || d.power_epoch != event.power_epoch) break;
      const ContactSpec& contact = d.model.boot_contacts[event.contact];
      ExecuteContact(event.device, contact);
      Schedule({clock_.now() + *contact.interval, 0, event.device,
                EventKind::kPeriodic, event.power_epoch, event.contact, 0});
      break;
    }
    case EventKind::kCompletion: {
      auto it = pending_.find(event.trigger);
      if (it == pending_.end()) break;
      PendingCompletion pending = std::move(it->second);
      pending_.erase(it);
      // A power cycle in between abandons the functionality.
      if (d.power != Power::kOn || d.power_epoch != event.power_epoch) break;
      d.state[pending.effect.field] = pending.effect.value;
      pending.event.t = clock_.now();
      completed_.emplace(event.trigger, pending.event);
      break;
    }
  }
}

std::uint64_t Lab::OpenWindow(std::string_view device) {
  std::lock_guard lock(mu_);
  const DeviceInstance& d = devices_[IndexOf(device)];
  return capture_.OpenWindow(d.model.id, clock_.now(), d.power_epoch);
}

capture::CaptureWindow Lab::CloseWindow(std::uint64_t window_id) {
  std::lock_guard lock(mu_);
  return capture_.CloseWindow(window_id, clock_.now());
}

void Lab::SetFault(std::string_view device, DeviceFault fault) {
  std::lock_guard lock(mu_);
  devices_[IndexOf(device)].fault = fault;
}

}  // namespace iotrim::netlab
