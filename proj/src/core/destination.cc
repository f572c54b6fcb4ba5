#include "iotrim/core/destination.h"

#include <algorithm>

#include "iotrim/error.h"

namespace iotrim {
namespace {

constexpr std::size_t kMaxNameLength = 253;
constexpr std::size_t kMaxLabelLength = 63;

bool IsLabelChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_';
}

// Returns an empty string when valid, otherwise the reason.
std::string CheckNormalized(std::string_view name) {
  if (name.empty()) return "empty name";
  if (name.size() > kMaxNameLength) return "name exceeds 253 characters";
  std::size_t label_start = 0;
  for (std::size_t i = 0; i <= name.size(); ++i) {
    if (i == name.size() || name[i] == '.') {
      const std::size_t len = i - label_start;
      if (len == 0) return "empty label";
      if (len > kMaxLabelLength) return "label exceeds 63 characters";
      label_start = i + 1;
    } else if (!IsLabelChar(name[i])) {
      return std::string("invalid character '") + name[i] + "'";
    }
  }
  return {};
}

std::string Lowered(std::string_view name) {
  std::string out(name);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  });
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

}  // namespace

std::string_view ToString(Transport t) {
  switch (t) {
    case Transport::kTcp: return "TCP";
    case Transport::kUdp: return "UDP";
    case Transport::kIcmp: return "ICMP";
  }
  return "?";
}

Transport ParseTransport(std::string_view text) {
  const std::string lower = Lowered(text);
  if (lower == "tcp") return Transport::kTcp;
  if (lower == "udp") return Transport::kUdp;
  if (lower == "icmp") return Transport::kIcmp;
  throw Error(ErrorCode::kValidation,
              "unknown transport '" + std::string(text) + "'");
}

std::string NormalizeDnsName(std::string_view name) {
  std::string out = Lowered(name);
  if (auto reason = CheckNormalized(out); !reason.empty()) {
    throw Error(ErrorCode::kValidation,
                "malformed DNS name '" + std::string(name) + "': " + reason);
  }
  return out;
}

bool IsValidDnsName(std::string_view name) {
  return CheckNormalized(Lowered(name)).empty();
}

DestinationKey::DestinationKey(std::string name, bool ip_literal,
                               Transport transport,
                               std::optional<std::uint16_t> port)
    : name_(std::move(name)),
      ip_literal_(ip_literal),
      transport_(transport),
      port_(transport == Transport::kIcmp ? std::nullopt : port) {
  if (transport != Transport::kIcmp && !port_) {
    throw Error(ErrorCode::kValidation,
                "destination " + name_ + " over " +
                    std::string(iotrim::ToString(transport)) + " needs a port");
  }
}

DestinationKey DestinationKey::ForName(std::string_view dns_name,
                                       Transport transport,
                                       std::optional<std::uint16_t> port) {
  std::string normalized = NormalizeDnsName(dns_name);
  if (Ipv4::TryParse(normalized)) {
    throw Error(ErrorCode::kValidation,
                "'" + normalized + "' is an IP literal, not a DNS name");
  }
  return DestinationKey(std::move(normalized), false, transport, port);
}

DestinationKey DestinationKey::ForAddress(Ipv4 address, Transport transport,
                                          std::optional<std::uint16_t> port) {
  return DestinationKey(address.ToString(), true, transport, port);
}

DestinationKey DestinationKey::Parse(std::string_view name_or_ip,
                                     Transport transport,
                                     std::optional<std::uint16_t> port) {
  if (auto ip = Ipv4::TryParse(name_or_ip)) {
    return ForAddress(*ip, transport, port);
  }
  return ForName(name_or_ip, transport, port);
}

Ipv4 DestinationKey::address() const {
  if (!ip_literal_) {
    throw Error(ErrorCode::kNotApplicable, name_ + " is not an IP literal");
  }
  return Ipv4::Parse(name_);
}

std::string DestinationKey::ToString() const {
  std::string out = name_ + ' ' + std::string(iotrim::ToString(transport_));
  if (port_) out += '/' + std::to_string(*port_);
  return out;
}

std::strong_ordering operator<=>(const DestinationKey& a,
                                 const DestinationKey& b) {
  if (auto c = a.name_ <=> b.name_; c != 0) return c;
  if (auto c = a.transport_ <=> b.transport_; c != 0) return c;
  if (auto c = a.ip_literal_ <=> b.ip_literal_; c != 0) return c;
  return a.port_.value_or(0) <=> b.port_.value_or(0);
}

DestinationKey MakeDestinationKey(const FlowObservation& observation) {
  if (observation.resolved_name) {
    return DestinationKey::ForName(*observation.resolved_name,
                                   observation.transport,
                                   observation.dst_port);
  }
  return DestinationKey::ForAddress(observation.dst_ip, observation.transport,
                                    observation.dst_port);
}

void AddressAttribution::RecordAnswer(std::string_view name,
                                      std::span<const Ipv4> addresses) {
  const std::string normalized = NormalizeDnsName(name);
  for (Ipv4 addr : addresses) {
    if (addr.is_loopback()) continue;
    by_address_[addr] = normalized;
  }
}

std::optional<std::string> AddressAttribution::NameFor(Ipv4 address) const {
  auto it = by_address_.find(address);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

DestinationKey AddressAttribution::KeyFor(
    Ipv4 dst_ip, Transport transport, std::optional<std::uint16_t> port) const {
  return MakeDestinationKey({NameFor(dst_ip), dst_ip, transport, port});
}

}  // namespace iotrim

std::size_t std::hash<iotrim::DestinationKey>::operator()(
    const iotrim::DestinationKey& key) const noexcept {
  std::size_t h = std::hash<std::string>{}(key.name());
  h ^= (static_cast<std::size_t>(key.transport()) + 0x9e3779b97f4a7c15ULL +
        (h << 6) + (h >> 2));
  const std::size_t port = key.port() ? *key.port() + 1u : 0u;
  h ^= (port + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return h;
}
