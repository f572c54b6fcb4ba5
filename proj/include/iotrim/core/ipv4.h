#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace iotrim {

/// IPv4 address in host byte order.
class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
               (std::uint32_t{c} << 8) | std::uint32_t{d}) {}

  /// Strict dotted-quad: four decimal octets, no leading zeros, no spaces.
  static std::optional<Ipv4> TryParse(std::string_view text);
  /// Throws Error(kValidation) on malformed input.
  static Ipv4 Parse(std::string_view text);

  static constexpr Ipv4 Loopback() { return Ipv4(127, 0, 0, 1); }

  constexpr std::uint32_t value() const { return value_; }
  constexpr bool is_loopback() const { return (value_ >> 24) == 127; }
  std::string ToString() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

 private:
  std::uint32_t value_ = 0;
};

/// CIDR prefix such as 52.0.0.0/8.
struct Ipv4Prefix {
  Ipv4 network;
  int length = 32;

  static Ipv4Prefix Parse(std::string_view text);
  bool Contains(Ipv4 addr) const;
  std::string ToString() const;
};

}  // namespace iotrim

template <>
struct std::hash<iotrim::Ipv4> {
  std::size_t operator()(iotrim::Ipv4 ip) const noexcept {
    return std::hash<std::uint32_t>{}(ip.value());
  }
};
