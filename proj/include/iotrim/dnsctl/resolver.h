#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/core/ipv4.h"
#include "iotrim/dnsctl/wire.h"
#include "iotrim/dnsctl/zone.h"

namespace iotrim::dnsctl {

/// Device scope that matches every requester.
inline constexpr std::string_view kAllDevices = "*";

enum class RuleKind : std::uint8_t { kDnsOverride, kIpDrop };

std::string_view ToString(RuleKind kind);

struct BlockRule {
  std::uint64_t id = 0;
  std::string device;  // device id or kAllDevices
  RuleKind kind = RuleKind::kDnsOverride;
  std::string target;  // normalized DNS name or dotted quad
  double created_at = 0;

  friend bool operator==(const BlockRule&, const BlockRule&) = default;
};

/// Per-device-view resolver over static zone data with sinkhole overrides.
///
/// Queries read an immutable snapshot of the rule set; mutations build a new
/// snapshot and publish it under a lock, so every query observes the rules
/// either entirely before or entirely after a mutation.
class Resolver {
 public:
  using TimeSource = std::function<double()>;

  explicit Resolver(Zone zone, std::uint64_t seed = 0, TimeSource now = {});

  /// Full wire path: decode, resolve, encode. Malformed input yields a
  /// FORMERR response rather than an exception.
  std::vector<std::uint8_t> HandleWire(std::span<const std::uint8_t> query,
                                       std::string_view requester) const;
  dns::Message Resolve(const dns::Message& query,
                       std::string_view requester) const;

  /// Idempotent: an identical rule returns the existing id.
  std::uint64_t SetBlock(std::string_view device, std::string_view name);
  std::uint64_t SetIpDrop(std::string_view device, Ipv4 address);
  std::uint64_t SetIpDrop(std::string_view device, std::string_view address);
  /// Throws kNotFound for an unknown id.
  void ClearRule(std::uint64_t rule_id);
  /// Restores a persisted rule set (CLI admin). Replaces all rules.
  void ReplaceRules(std::vector<BlockRule> rules);

  bool IsOverridden(std::string_view device, std::string_view name) const;
  bool IsDropped(std::string_view device, Ipv4 address) const;
  std::vector<BlockRule> Rules() const;
  std::size_t rule_count() const;

  const Zone& zone() const { return zone_; }

 private:
  struct RuleSet {
    std::vector<BlockRule> rules;
    std::map<std::tuple<std::string, RuleKind, std::string>, std::uint64_t,
             std::less<>>
        index;
    std::uint64_t next_id = 1;

    const BlockRule* Match(std::string_view device, RuleKind kind,
                           std::string_view target) const;
  };

  std::shared_ptr<const RuleSet> Snapshot() const;
  std::uint64_t AddRule(std::string device, RuleKind kind, std::string target);

  Zone zone_;
  // One rotation cursor per zone entry.
  std::unique_ptr<std::atomic<std::uint32_t>[]> cursors_;
  TimeSource now_;

  mutable std::mutex mu_;
  std::shared_ptr<const RuleSet> rules_;
};

std::string SerializeRules(const std::vector<BlockRule>& rules);
std::vector<BlockRule> ParseRules(std::string_view text);

}  // namespace iotrim::dnsctl
