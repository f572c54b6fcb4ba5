#include "iotrim/core/ipv4.h"

#include <charconv>

#include "iotrim/error.h"

namespace iotrim {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotApplicable: return "not-applicable";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kUndefinedShare: return "undefined-share";
    case ErrorCode::kDeviceBroken: return "device-broken";
    case ErrorCode::kUnknownOwner: return "unknown-owner";
    case ErrorCode::kMismatch: return "mismatch";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnavailable: return "unavailable";
  }
  return "unknown";
}

std::optional<Ipv4> Ipv4::TryParse(std::string_view text) {
  std::uint32_t value = 0;
  std::size_t pos = 0;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (pos >= text.size() || text[pos] != '.') return std::nullopt;
      ++pos;
    }
    std::size_t end = pos;
    while (end < text.size() && text[end] >= '0' && text[end] <= '9') ++end;
    const std::size_t len = end - pos;
    if (len == 0 || len > 3) return std::nullopt;
    if (len > 1 && text[pos] == '0') return std::nullopt;
    unsigned part = 0;
    std::from_chars(text.data() + pos, text.data() + end, part);
    if (part > 255) return std::nullopt;
    value = (value << 8) | part;
    pos = end;
  }
  if (pos != text.size()) return std::nullopt;
  return Ipv4(value);
}

Ipv4 Ipv4::Parse(std::string_view text) {
  if (auto ip = TryParse(text)) return *ip;
  throw Error(ErrorCode::kValidation,
              "malformed IPv4 address '" + std::string(text) + "'");
}

std::string Ipv4::ToString() const {
  return std::to_string(value_ >> 24) + '.' +
         std::to_string((value_ >> 16) & 0xff) + '.' +
         std::to_string((value_ >> 8) & 0xff) + '.' +
         std::to_string(value_ & 0xff);
}

Ipv4Prefix Ipv4Prefix::Parse(std::string_view text) {
  Ipv4Prefix prefix;
  const auto slash = text.find('/');
  prefix.network = Ipv4::Parse(text.substr(0, slash));
  if (slash == std::string_view::npos) return prefix;
  const auto len_text = text.substr(slash + 1);
  int len = -1;
  auto [ptr, ec] =
      std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (ec != std::errc{} || ptr != len_text.data() + len_text.size() ||
      len < 0 || len > 32) {
    throw Error(ErrorCode::kValidation,
                "malformed prefix length in '" + std::string(text) + "'");
  }
  prefix.length = len;
  return prefix;
}

bool Ipv4Prefix::Contains(Ipv4 addr) const {
  if (length == 0) return true;
  const std::uint32_t mask = ~std::uint32_t{0} << (32 - length);
  return (addr.value() & mask) == (network.value() & mask);
}

std::string Ipv4Prefix::ToString() const {
  return network.ToString() + '/' + std::to_string(length);
}

}  // namespace iotrim
