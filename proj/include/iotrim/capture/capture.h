#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iotrim/core/destination.h"
#include "iotrim/core/ipv4.h"

namespace iotrim::capture {

struct DnsEvent {
  std::string device;
  double t = 0;
  std::string name;
  std::uint16_t qtype = 1;
  std::uint8_t rcode = 0;
  std::vector<Ipv4> answers;

  friend bool operator==(const DnsEvent&, const DnsEvent&) = default;
};

struct FlowRecord {
  std::string device;
  Ipv4 dst_ip;
  std::optional<std::uint16_t> dst_port;
  Transport transport = Transport::kTcp;
  std::uint64_t bytes = 0;
  double t_start = 0;
  double t_end = 0;
  bool delivered = true;  // false when an IP drop rule discarded it

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// A logged event tagged with the device power-on epoch it happened in.
struct CaptureEvent {
  std::uint64_t power_epoch = 0;
  std::variant<DnsEvent, FlowRecord> payload;

  double time() const;
  const DnsEvent* dns() const { return std::get_if<DnsEvent>(&payload); }
  const FlowRecord* flow() const { return std::get_if<FlowRecord>(&payload); }
};

struct CaptureWindow {
  std::uint64_t id = 0;
  std::string device;
  double opened_at = 0;
  double closed_at = 0;
  /// Events between open and close, in arrival order.
  std::vector<CaptureEvent> events;
  /// DNS answers from the power epoch that was current at open time but
  /// arrived before the window opened. Used only to join flows to names.
  std::vector<CaptureEvent> join_context;

  std::vector<DnsEvent> dns_events() const;
  std::vector<FlowRecord> flows() const;
};

struct DestinationStats {
  DestinationKey key;
  std::uint64_t flows = 0;  // attempted, including dropped
  std::uint64_t bytes = 0;  // delivered payload only
  double first_seen = 0;

  friend bool operator==(const DestinationStats&, const DestinationStats&) = default;
};

/// Per-device append-only event log with non-overlapping capture windows.
/// Appends and window operations are serialized; readers get copies.
class Capture {
 public:
  void Record(std::uint64_t power_epoch, DnsEvent event);
  void Record(std::uint64_t power_epoch, FlowRecord event);

  /// Throws kPrecondition if the device already has an open window.
  std::uint64_t OpenWindow(const std::string& device, double now,
                           std::uint64_t current_power_epoch);
  /// Throws kNotFound for an unknown or already closed window id.
  CaptureWindow CloseWindow(std::uint64_t window_id, double now);
  bool HasOpenWindow(const std::string& device) const;

  std::vector<CaptureEvent> Log(const std::string& device) const;
  std::vector<FlowRecord> Flows(const std::string& device) const;
  std::vector<DnsEvent> DnsEvents(const std::string& device) const;

 private:
  struct OpenState {
    std::string device;
    double opened_at;
    std::size_t first_index;
    std::uint64_t power_epoch;
  };

  void Append(const std::string& device, CaptureEvent event);

  mutable std::mutex mu_;
  std::map<std::string, std::vector<CaptureEvent>> logs_;
  std::map<std::uint64_t, OpenState> open_;
  std::uint64_t next_window_ = 1;
};

/// Keys contacted in a closed window with flow counts and delivered bytes,
/// ordered by first observation. Flows join to names answered in the same
/// power epoch; unjoined flows become IP-literal keys; loopback flows (the
/// sinkhole) are skipped.
std::vector<DestinationStats> ExtractDestinations(const CaptureWindow& window);

/// Unique query names in a window, in first-seen order.
std::vector<std::string> UniqueQueryNames(const CaptureWindow& window);

/// Pooled byte totals across many windows.
struct TrafficTotals {
  std::map<DestinationKey, std::uint64_t> bytes_by_key;
  std::uint64_t total_bytes = 0;

  void Merge(const TrafficTotals& other);
  /// 100 * bytes(key) / total. Throws kUndefinedShare when total is zero.
  double SharePercent(const DestinationKey& key) const;

  friend bool operator==(const TrafficTotals&, const TrafficTotals&) = default;
};

/// Reference implementation: one window at a time.
TrafficTotals AccumulateTrafficSerial(std::span<const CaptureWindow> windows);
/// OpenMP implementation: windows extracted in parallel, totals reduced.
TrafficTotals AccumulateTraffic(std::span<const CaptureWindow> windows);

/// traffic_share over a device's campaign windows.
double TrafficShare(std::span<const CaptureWindow> windows,
                    const DestinationKey& key);

}  // namespace iotrim::capture
