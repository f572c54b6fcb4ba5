#include "iotrim/capture/capture.h"

#include <algorithm>
#include <unordered_map>

#include <omp.h>

#include "iotrim/error.h"

namespace iotrim::capture {

double CaptureEvent::time() const {
  if (const auto* d = dns()) return d->t;
  return flow()->t_start;
}

std::vector<DnsEvent> CaptureWindow::dns_events() const {
  std::vector<DnsEvent> out;
  for (const auto& e : events) {
    if (const auto* d = e.dns()) out.push_back(*d);
  }
  return out;
}

std::vector<FlowRecord> CaptureWindow::flows() const {
  std::vector<FlowRecord> out;
  for (const auto& e : events) {
    if (const auto* f = e.flow()) out.push_back(*f);
  }
  return out;
}

void Capture::Append(const std::string& device, CaptureEvent event) {
  std::lock_guard lock(mu_);
  logs_[device].push_back(std::move(event));
}

void Capture::Record(std::uint64_t power_epoch, DnsEvent event) {
  const std::string device = event.device;
  Append(device, CaptureEvent{power_epoch, std::move(event)});
}

void Capture::Record(std::uint64_t power_epoch, FlowRecord event) {
  if (event.t_end < event.t_start) {
    throw Error(ErrorCode::kValidation, "flow ends before it starts");
  }
  const std::string device = event.device;
  Append(device, CaptureEvent{power_epoch, std::move(event)});
}

std::uint64_t Capture::OpenWindow(const std::string& device, double now,
                                  std::uint64_t current_power_epoch) {
  std::lock_guard lock(mu_);
  for (const auto& [id, state] : open_) {
    if (state.device == device) {
      throw Error(ErrorCode::kPrecondition,
                  "device '" + device + "' already has open window " +
                      std::to_string(id));
    }
  }
  const std::uint64_t id = next_window_++;
  open_.emplace(id, OpenState{device, now, logs_[device].size(),
                              current_power_epoch});
  return id;
}

CaptureWindow Capture::CloseWindow(std::uint64_t window_id, double now) {
  std::lock_guard lock(mu_);
  auto it = open_.find(window_id);
  if (it == open_.end()) {
    throw Error(ErrorCode::kNotFound,
                "no open window " + std::to_string(window_id));
  }
  const OpenState state = it->second;
  open_.erase(it);
  const auto& log = logs_[state.device];
  CaptureWindow window;
  window.id = window_id;
  window.device = state.device;
  window.opened_at = state.opened_at;
  window.closed_at = now;
  window.events.assign(log.begin() + static_cast<std::ptrdiff_t>(state.first_index),
                       log.end());
  for (std::size_t i = 0; i < state.first_index; ++i) {
    if (log[i].power_epoch == state.power_epoch && log[i].dns()) {
      window.join_context.push_back(log[i]);
    }
  }
  return window;
}

bool Capture::HasOpenWindow(const std::string& device) const {
  std::lock_guard lock(mu_);
  return std::any_of(open_.begin(), open_.end(),
                     [&](const auto& kv) { return kv.second.device == device; });
}

std::vector<CaptureEvent> Capture::Log(const std::string& device) const {
  std::lock_guard lock(mu_);
  auto it = logs_.find(device);
  return it == logs_.end() ? std::vector<CaptureEvent>{} : it->second;
}

std::vector<FlowRecord> Capture::Flows(const std::string& device) const {
  std::vector<FlowRecord> out;
  for (const auto& e : Log(device)) {
    if (const auto* f = e.flow()) out.push_back(*f);
  }
  return out;
}

std::vector<DnsEvent> Capture::DnsEvents(const std::string& device) const {
  std::vector<DnsEvent> out;
  for (const auto& e : Log(device)) {
    if (const auto* d = e.dns()) out.push_back(*d);
  }
  return out;
}

std::vector<DestinationStats> ExtractDestinations(const CaptureWindow& window) {
  std::map<std::uint64_t, AddressAttribution> by_epoch;
  std::vector<DestinationStats> out;
  std::unordered_map<DestinationKey, std::size_t> index;

  auto learn = [&](const CaptureEvent& e) {
    const DnsEvent* d = e.dns();
    if (d && !d->answers.empty() && IsValidDnsName(d->name)) {
      by_epoch[e.power_epoch].RecordAnswer(d->name, d->answers);
    }
  };
  for (const auto& e : window.join_context) learn(e);
  for (const auto& e : window.events) {
    learn(e);
    const FlowRecord* f = e.flow();
    if (!f || f->dst_ip.is_loopback()) continue;
    const DestinationKey key =
        by_epoch[e.power_epoch].KeyFor(f->dst_ip, f->transport, f->dst_port);
    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) out.push_back({key, 0, 0, f->t_start});
    auto& stats = out[it->second];
    stats.first_seen = std::min(stats.first_seen, f->t_start);
    ++stats.flows;
    if (f->delivered) stats.bytes += f->bytes;
  }
  return out;
}

std::vector<std::string> UniqueQueryNames(const CaptureWindow& window) {
  std::vector<std::string> names;
  for (const auto& e : window.events) {
    const DnsEvent* d = e.dns();
    if (!d) continue;
    std::string name = IsValidDnsName(d->name) ? NormalizeDnsName(d->name) : d->name;
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(std::move(name));
    }
  }
  return names;
}

void TrafficTotals::Merge(const TrafficTotals& other) {
  for (const auto& [key, bytes] : other.bytes_by_key) bytes_by_key[key] += bytes;
  total_bytes += other.total_bytes;
}

double TrafficTotals::SharePercent(const DestinationKey& key) const {
  if (total_bytes == 0) {
    throw Error(ErrorCode::kUndefinedShare, "no traffic to compute a share over");
  }
  auto it = bytes_by_key.find(key);
  const std::uint64_t bytes = it == bytes_by_key.end() ? 0 : it->second;
  return 100.0 * static_cast<double>(bytes) / static_cast<double>(total_bytes);
}

namespace {

TrafficTotals TotalsForWindow(const CaptureWindow& window) {
  TrafficTotals totals;
  for (const auto& stats : ExtractDestinations(window)) {
    totals.bytes_by_key[stats.key] += stats.bytes;
    totals.total_bytes += stats.bytes;
  }
  return totals;
}

}  // namespace

TrafficTotals AccumulateTrafficSerial(std::span<const CaptureWindow> windows) {
  TrafficTotals totals;
  for (const auto& window : windows) totals.Merge(TotalsForWindow(window));
  return totals;
}

TrafficTotals AccumulateTraffic(std::span<const CaptureWindow> windows) {
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  std::vector<TrafficTotals> partial(static_cast<std::size_t>(omp_get_max_threads()));
#pragma omp parallel
  {
    TrafficTotals& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      mine.Merge(TotalsForWindow(windows[static_cast<std::size_t>(i)]));
    }
  }
  TrafficTotals totals;
  for (const auto& p : partial) totals.Merge(p);
  return totals;
}

double TrafficShare(std::span<const CaptureWindow> windows,
                    const DestinationKey& key) {
  return AccumulateTraffic(windows).SharePercent(key);
}

}  // namespace iotrim::capture
