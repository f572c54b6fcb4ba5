#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "iotrim/core/ipv4.h"

namespace iotrim {

enum class Transport : std::uint8_t { kTcp, kUdp, kIcmp };

std::string_view ToString(Transport t);
Transport ParseTransport(std::string_view text);

/// Lowercases and strips one trailing dot. Throws kValidation for empty
/// labels, labels over 63 octets, names over 253 octets or characters
/// outside [a-z0-9-_].
std::string NormalizeDnsName(std::string_view name);
bool IsValidDnsName(std::string_view name);

/// Canonical identity of a contacted destination: (name-or-IP, transport,
/// port). `name` holds a normalized DNS name, or a dotted quad when the flow
/// had no DNS answer behind it. ICMP keys never carry a port.
class DestinationKey {
 public:
  DestinationKey() = default;

  static DestinationKey ForName(std::string_view dns_name, Transport transport,
                                std::optional<std::uint16_t> port);
  static DestinationKey ForAddress(Ipv4 address, Transport transport,
                                   std::optional<std::uint16_t> port);
  /// Accepts either form; a string that parses as a dotted quad becomes an IP
  /// literal key.
  static DestinationKey Parse(std::string_view name_or_ip, Transport transport,
                              std::optional<std::uint16_t> port);

  const std::string& name() const { return name_; }
  Transport transport() const { return transport_; }
  std::optional<std::uint16_t> port() const { return port_; }
  bool is_ip_literal() const { return ip_literal_; }
  /// Only meaningful for IP-literal keys.
  Ipv4 address() const;

  /// "ntp.org UDP/123", "210.72.145.44 ICMP".
  std::string ToString() const;

  friend bool operator==(const DestinationKey&, const DestinationKey&) = default;
  friend std::strong_ordering operator<=>(const DestinationKey& a,
                                          const DestinationKey& b);

 private:
  DestinationKey(std::string name, bool ip_literal, Transport transport,
                 std::optional<std::uint16_t> port);

  std::string name_;
  bool ip_literal_ = false;
  Transport transport_ = Transport::kTcp;
  std::optional<std::uint16_t> port_;
};

/// One observed flow, optionally already joined to the DNS name whose answer
/// contained its destination address.
struct FlowObservation {
  std::optional<std::string> resolved_name;
  Ipv4 dst_ip;
  Transport transport = Transport::kTcp;
  std::optional<std::uint16_t> dst_port;
};

DestinationKey MakeDestinationKey(const FlowObservation& observation);

/// Joins destination addresses to the DNS names whose answers carried them.
/// Scoped by the caller to a single device and experiment window; the most
/// recent answer containing an address wins.
class AddressAttribution {
 public:
  void RecordAnswer(std::string_view name, std::span<const Ipv4> addresses);
  std::optional<std::string> NameFor(Ipv4 address) const;
  DestinationKey KeyFor(Ipv4 dst_ip, Transport transport,
                        std::optional<std::uint16_t> port) const;
  void Clear() { by_address_.clear(); }

 private:
  std::unordered_map<Ipv4, std::string> by_address_;
};

}  // namespace iotrim

template <>
struct std::hash<iotrim::DestinationKey> {
  std::size_t operator()(const iotrim::DestinationKey& key) const noexcept;
};
