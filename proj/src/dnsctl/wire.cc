#include "iotrim/dnsctl/wire.h"

#include <map>

#include "iotrim/error.h"

namespace iotrim::dns {
namespace {

constexpr std::size_t kHeaderSize = 12;
constexpr std::size_t kMaxLabel = 63;
constexpr std::size_t kMaxWireName = 255;
constexpr std::uint16_t kPointerLimit = 0x3fff;

class Writer {
 public:
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void U32(std::uint32_t v) {
    U16(static_cast<std::uint16_t>(v >> 16));
    U16(static_cast<std::uint16_t>(v));
  }
  void Bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }

  // Emits `name`, replacing the longest previously written suffix with a
  // compression pointer.
  void Name(const std::string& name) {
    std::size_t wire_len = 1;
    std::size_t pos = 0;
    while (pos < name.size()) {
      const std::string suffix = name.substr(pos);
      if (auto it = offsets_.find(suffix); it != offsets_.end()) {
        U16(static_cast<std::uint16_t>(0xc000 | it->second));
        return;
      }
      auto dot = name.find('.', pos);
      if (dot == std::string::npos) dot = name.size();
      const std::size_t len = dot - pos;
      if (len == 0 || len > kMaxLabel) {
        throw Error(ErrorCode::kValidation, "unencodable DNS name '" + name + "'");
      }
      wire_len += len + 1;
      if (wire_len > kMaxWireName) {
        throw Error(ErrorCode::kValidation, "DNS name too long '" + name + "'");
      }
      if (out_.size() <= kPointerLimit) offsets_.emplace(suffix, out_.size());
      U8(static_cast<std::uint8_t>(len));
      out_.insert(out_.end(), name.begin() + static_cast<std::ptrdiff_t>(pos),
                  name.begin() + static_cast<std::ptrdiff_t>(dot));
      pos = dot + 1;
    }
    U8(0);
  }

  std::vector<std::uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
  std::map<std::string, std::size_t> offsets_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8() {
    Need(1);
    return in_[pos_++];
  }
  std::uint16_t U16() {
    Need(2);
    const auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t U32() {
    const std::uint32_t hi = U16();
    return (hi << 16) | U16();
  }
  std::vector<std::uint8_t> Bytes(std::size_t n) {
    Need(n);
    std::vector<std::uint8_t> out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  std::string Name() {
    std::string name;
    std::size_t cursor = pos_;
    bool jumped = false;
    std::size_t wire_len = 1;
    int jumps = 0;
    while (true) {
      if (cursor >= in_.size()) Fail("name runs past end of message");
      const std::uint8_t len = in_[cursor];
      if ((len & 0xc0) == 0xc0) {
        if (cursor + 1 >= in_.size()) Fail("truncated compression pointer");
        const std::size_t target = ((len & 0x3f) << 8) | in_[cursor + 1];
        if (!jumped) pos_ = cursor + 2;
        jumped = true;
        // Pointers must go strictly backwards; this also bounds loops.
        if (target >= cursor || ++jumps > 64) Fail("compression pointer loop");
        cursor = target;
        continue;
      }
      if ((len & 0xc0) != 0) Fail("reserved label type");
      if (len == 0) {
        if (!jumped) pos_ = cursor + 1;
        break;
      }
      wire_len += len + 1u;
      if (wire_len > kMaxWireName) Fail("name exceeds 255 octets");
      if (cursor + 1 + len > in_.size()) Fail("label runs past end of message");
      if (!name.empty()) name += '.';
      for (std::size_t i = 0; i < len; ++i) {
        const char c = static_cast<char>(in_[cursor + 1 + i]);
        if (c == '.') Fail("label contains a dot");
        name += c;
      }
      cursor += 1 + len;
    }
    return name;
  }

  bool AtEnd() const { return pos_ == in_.size(); }

  [[noreturn]] static void Fail(const std::string& what) {
    throw Error(ErrorCode::kParse, "DNS wire: " + what);
  }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > in_.size()) Fail("truncated message");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void WriteRecord(Writer& w, const ResourceRecord& rr) {
  if (rr.rdata.size() > 0xffff) {
    throw Error(ErrorCode::kValidation, "rdata too large");
  }
  w.Name(rr.name);
  w.U16(rr.rtype);
  w.U16(rr.rclass);
  w.U32(rr.ttl);
  w.U16(static_cast<std::uint16_t>(rr.rdata.size()));
  w.Bytes(rr.rdata);
}

ResourceRecord ReadRecord(Reader& r) {
  ResourceRecord rr;
  rr.name = r.Name();
  rr.rtype = r.U16();
  rr.rclass = r.U16();
  rr.ttl = r.U32();
  const std::uint16_t len = r.U16();
  rr.rdata = r.Bytes(len);
  return rr;
}

}  // namespace

std::vector<std::uint8_t> Encode(const Message& message) {
  const auto& h = message.header;
  if (message.questions.size() > 0xffff || message.answers.size() > 0xffff ||
      message.authority.size() > 0xffff || message.additional.size() > 0xffff) {
    throw Error(ErrorCode::kValidation, "section too large");
  }
  Writer w;
  w.U16(h.id);
  std::uint16_t flags = 0;
  flags |= static_cast<std::uint16_t>(h.qr) << 15;
  flags |= static_cast<std::uint16_t>((h.opcode & 0x0f) << 11);
  flags |= static_cast<std::uint16_t>(h.aa) << 10;
  flags |= static_cast<std::uint16_t>(h.tc) << 9;
  flags |= static_cast<std::uint16_t>(h.rd) << 8;
  flags |= static_cast<std::uint16_t>(h.ra) << 7;
  flags |= static_cast<std::uint16_t>((h.z & 0x07) << 4);
  flags |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(h.rcode) & 0x0f);
  w.U16(flags);
  w.U16(static_cast<std::uint16_t>(message.questions.size()));
  w.U16(static_cast<std::uint16_t>(message.answers.size()));
  w.U16(static_cast<std::uint16_t>(message.authority.size()));
  w.U16(static_cast<std::uint16_t>(message.additional.size()));
  for (const auto& q : message.questions) {
    w.Name(q.name);
    w.U16(q.qtype);
    w.U16(q.qclass);
  }
  for (const auto& rr : message.answers) WriteRecord(w, rr);
  for (const auto& rr : message.authority) WriteRecord(w, rr);
  for (const auto& rr : message.additional) WriteRecord(w, rr);
  return w.Take();
}

Message Decode(std::span<const std::uint8_t> wire) {
  if (wire.size() < kHeaderSize) Reader::Fail("shorter than a header");
  Reader r(wire);
  Message m;
  m.header.id = r.U16();
  const std::uint16_t flags = r.U16();
  m.header.qr = (flags >> 15) & 1;
  m.header.opcode = (flags >> 11) & 0x0f;
  m.header.aa = (flags >> 10) & 1;
  m.header.tc = (flags >> 9) & 1;
  m.header.rd = (flags >> 8) & 1;
  m.header.ra = (flags >> 7) & 1;
  m.header.z = (flags >> 4) & 0x07;
  m.header.rcode = static_cast<Rcode>(flags & 0x0f);
  const std::uint16_t qd = r.U16();
  const std::uint16_t an = r.U16();
  const std::uint16_t ns = r.U16();
  const std::uint16_t ar = r.U16();
  for (int i = 0; i < qd; ++i) {
    Question q;
    q.name = r.Name();
    q.qtype = r.U16();
    q.qclass = r.U16();
    m.questions.push_back(std::move(q));
  }
  for (int i = 0; i < an; ++i) m.answers.push_back(ReadRecord(r));
  for (int i = 0; i < ns; ++i) m.authority.push_back(ReadRecord(r));
  for (int i = 0; i < ar; ++i) m.additional.push_back(ReadRecord(r));
  if (!r.AtEnd()) Reader::Fail("trailing bytes after last record");
  return m;
}

Message MakeQuery(std::uint16_t id, std::string name, std::uint16_t qtype,
                  bool recursion_desired) {
  Message m;
  m.header.id = id;
  m.header.rd = recursion_desired;
  m.questions.push_back({std::move(name), qtype, kClassIn});
  return m;
}

ResourceRecord MakeARecord(std::string name, Ipv4 address, std::uint32_t ttl) {
  const std::uint32_t v = address.value();
  return ResourceRecord{std::move(name), type::kA, kClassIn, ttl,
                        {static_cast<std::uint8_t>(v >> 24),
                         static_cast<std::uint8_t>(v >> 16),
                         static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v)}};
}

std::vector<Ipv4> AnswerAddresses(const Message& message) {
  std::vector<Ipv4> out;
  for (const auto& rr : message.answers) {
    if (rr.rtype != type::kA || rr.rclass != kClassIn || rr.rdata.size() != 4) {
      continue;
    }
    out.emplace_back(rr.rdata[0], rr.rdata[1], rr.rdata[2], rr.rdata[3]);
  }
  return out;
}

}  // namespace iotrim::dns
