#pragma once

// DNS message format (RFC 1035 section 4): header, question and resource
// record sections, with name compression on encode and pointer-following on
// decode.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iotrim/core/ipv4.h"

namespace iotrim::dns {

namespace type {
inline constexpr std::uint16_t kA = 1;
inline constexpr std::uint16_t kNs = 2;
inline constexpr std::uint16_t kCname = 5;
inline constexpr std::uint16_t kSoa = 6;
inline constexpr std::uint16_t kPtr = 12;
inline constexpr std::uint16_t kMx = 15;
inline constexpr std::uint16_t kTxt = 16;
inline constexpr std::uint16_t kAaaa = 28;
}  // namespace type

inline constexpr std::uint16_t kClassIn = 1;

enum class Rcode : std::uint8_t {
  kNoError = 0,
  kFormErr = 1,
  kServFail = 2,
  kNxDomain = 3,
  kNotImp = 4,
  kRefused = 5,
};

struct Header {
  std::uint16_t id = 0;
  bool qr = false;
  std::uint8_t opcode = 0;
  bool aa = false;
  bool tc = false;
  bool rd = false;
  bool ra = false;
  std::uint8_t z = 0;
  Rcode rcode = Rcode::kNoError;

  friend bool operator==(const Header&, const Header&) = default;
};

struct Question {
  std::string name;  // dotted, no trailing dot, case preserved
  std::uint16_t qtype = type::kA;
  std::uint16_t qclass = kClassIn;

  friend bool operator==(const Question&, const Question&) = default;
};

struct ResourceRecord {
  std::string name;
  std::uint16_t rtype = type::kA;
  std::uint16_t rclass = kClassIn;
  std::uint32_t ttl = 0;
  std::vector<std::uint8_t> rdata;

  friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

struct Message {
  Header header;
  std::vector<Question> questions;
  std::vector<ResourceRecord> answers;
  std::vector<ResourceRecord> authority;
  std::vector<ResourceRecord> additional;

  friend bool operator==(const Message&, const Message&) = default;
};

/// Throws Error(kValidation) for names that cannot be encoded.
std::vector<std::uint8_t> Encode(const Message& message);
/// Throws Error(kParse) on truncated input, bad labels, pointer loops or
/// trailing bytes.
Message Decode(std::span<const std::uint8_t> wire);

Message MakeQuery(std::uint16_t id, std::string name,
                  std::uint16_t qtype = type::kA, bool recursion_desired = true);
ResourceRecord MakeARecord(std::string name, Ipv4 address, std::uint32_t ttl);
/// Addresses carried by A records in the answer section, in order.
std::vector<Ipv4> AnswerAddresses(const Message& message);

}  // namespace iotrim::dns
