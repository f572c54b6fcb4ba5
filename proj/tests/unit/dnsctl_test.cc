#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "iotrim/dnsctl/resolver.h"
#include "iotrim/dnsctl/udp_server.h"
#include "iotrim/dnsctl/wire.h"
#include "iotrim/dnsctl/zone.h"
#include "iotrim/error.h"
#include "test_support.h"

namespace iotrim::dnsctl {
namespace {

using dns::Message;
using dns::Rcode;

Zone SmallZone() {
  return Zone({{"tplinkcloud.com", {Ipv4(52, 0, 0, 10)}, 60},
               {"ntp.org", {Ipv4(1, 2, 3, 4), Ipv4(5, 6, 7, 8)}, 300}});
}

Message Ask(const Resolver& r, const std::string& name, std::string_view device,
            std::uint16_t qtype = dns::type::kA) {
  const auto wire = dns::Encode(dns::MakeQuery(0x4242, name, qtype));
  return dns::Decode(r.HandleWire(wire, device));
}

bool IsSinkhole(const Message& m) {
  return m.header.rcode == Rcode::kNoError && m.answers.size() == 1 &&
         m.answers[0].rtype == dns::type::kA && m.answers[0].ttl == 0 &&
         dns::AnswerAddresses(m) == std::vector<Ipv4>{Ipv4::Loopback()};
}

TEST(Wire, EncodesQueryBitExactly) {
  const auto wire = dns::Encode(dns::MakeQuery(0x1234, "ntp.org"));
  const std::vector<std::uint8_t> expected = {
      0x12, 0x34, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
      0x03, 'n',  't',  'p',  0x03, 'o',  'r',  'g',  0x00, 0x00, 0x01, 0x00, 0x01};
  EXPECT_EQ(wire, expected);
  EXPECT_EQ(dns::Decode(wire), dns::MakeQuery(0x1234, "ntp.org"));
}

TEST(Wire, CompressesRepeatedNames) {
  Resolver r(SmallZone());
  const auto reply = r.HandleWire(dns::Encode(dns::MakeQuery(7, "tplinkcloud.com")), "bulb");
  // Header 12 + question (17 name + 4) then the answer name as a pointer to 12.
  ASSERT_GT(reply.size(), 35u);
  EXPECT_EQ(reply[33], 0xC0);
  EXPECT_EQ(reply[34], 0x0C);
  const auto decoded = dns::Decode(reply);
  EXPECT_EQ(decoded.answers.at(0).name, "tplinkcloud.com");
  EXPECT_EQ(dns::Encode(decoded), reply);
}

TEST(Wire, RejectsMalformedInput) {
  auto code = [](std::vector<std::uint8_t> bytes) {
    try {
      dns::Decode(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code({0x00, 0x01}), ErrorCode::kParse);
  auto wire = dns::Encode(dns::MakeQuery(1, "a.com"));
  wire.push_back(0);
  EXPECT_EQ(code(wire), ErrorCode::kParse);
  // Question name that points at itself.
  std::vector<std::uint8_t> loop = {0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0,
                                    0xC0, 12, 0, 1, 0, 1};
  EXPECT_EQ(code(loop), ErrorCode::kParse);
  // Label length runs past the end.
  std::vector<std::uint8_t> trunc = {0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 9, 'a'};
  EXPECT_EQ(code(trunc), ErrorCode::kParse);
}

TEST(Wire, RoundTripsRandomMessages) {
  std::mt19937_64 rng(3);
  Resolver r(SmallZone());
  auto label = [&] {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) s += "abcdefghijklmnopqrstuvwxyz0123456789"[rng() % 36];
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    std::string name = label();
    for (int l = static_cast<int>(rng() % 4); l >= 0; --l) name += "." + label();
    Message q = dns::MakeQuery(static_cast<std::uint16_t>(rng()), name, dns::type::kA,
                               rng() % 2 == 0);
    const auto wire = dns::Encode(q);
    ASSERT_EQ(dns::Decode(wire), q);
    const auto reply = r.HandleWire(wire, "bulb");
    ASSERT_EQ(dns::Encode(dns::Decode(reply)), reply) << name;
  }
}

TEST(Resolver, OverrideAnswersLoopback) {
  Resolver r(SmallZone());
  r.SetBlock("bulb", "ntp.org");
  const auto m = Ask(r, "ntp.org", "bulb");
  EXPECT_TRUE(IsSinkhole(m));
  EXPECT_EQ(m.header.id, 0x4242);
  EXPECT_TRUE(m.header.qr);
}

TEST(Resolver, PassthroughAndNxDomain) {
  Resolver r(SmallZone());
  const auto m = Ask(r, "tplinkcloud.com", "bulb");
  EXPECT_EQ(dns::AnswerAddresses(m), std::vector<Ipv4>{Ipv4(52, 0, 0, 10)});
  EXPECT_EQ(m.answers[0].ttl, 60u);
  const auto nx = Ask(r, "unknown.example", "any");
  EXPECT_EQ(nx.header.rcode, Rcode::kNxDomain);
  EXPECT_TRUE(nx.answers.empty());
}

TEST(Resolver, CaseInsensitiveLookupPreservesQuestionCase) {
  Resolver r(SmallZone());
  r.SetBlock("bulb", "NTP.ORG.");
  const auto m = Ask(r, "NtP.oRg", "bulb");
  EXPECT_TRUE(IsSinkhole(m));
  EXPECT_EQ(m.questions.at(0).name, "NtP.oRg");
}

TEST(Resolver, PerDeviceViews) {
  Resolver r(SmallZone());
  r.SetBlock("bulb", "ntp.org");
  EXPECT_TRUE(IsSinkhole(Ask(r, "ntp.org", "bulb")));
  EXPECT_FALSE(IsSinkhole(Ask(r, "ntp.org", "yi-cam")));
  const auto id = r.SetBlock(kAllDevices, "tplinkcloud.com");
  EXPECT_TRUE(IsSinkhole(Ask(r, "tplinkcloud.com", "yi-cam")));
  r.ClearRule(id);
  EXPECT_FALSE(IsSinkhole(Ask(r, "tplinkcloud.com", "yi-cam")));
}

TEST(Resolver, ClearRestoresZoneAnswer) {
  Resolver r(SmallZone());
  const auto id = r.SetBlock("bulb", "tplinkcloud.com");
  r.ClearRule(id);
  EXPECT_EQ(dns::AnswerAddresses(Ask(r, "tplinkcloud.com", "bulb")),
            std::vector<Ipv4>{Ipv4(52, 0, 0, 10)});
  EXPECT_THROW(r.ClearRule(id), Error);
}

TEST(Resolver, DuplicateRuleIsIdempotent) {
  Resolver r(SmallZone());
  const auto a = r.SetBlock("bulb", "ntp.org");
  EXPECT_EQ(r.SetBlock("bulb", "NTP.org."), a);
  EXPECT_EQ(r.rule_count(), 1u);
  const auto d = r.SetIpDrop("bosiwo", "210.72.145.44");
  EXPECT_EQ(r.SetIpDrop("bosiwo", Ipv4(210, 72, 145, 44)), d);
  EXPECT_NE(a, d);
  EXPECT_EQ(r.rule_count(), 2u);
}

TEST(Resolver, RuleValidation) {
  Resolver r(SmallZone());
  EXPECT_THROW(r.SetBlock("bulb", "bad..name"), Error);
  EXPECT_THROW(r.SetIpDrop("bulb", "210.72.145"), Error);
  EXPECT_THROW(r.SetBlock("", "ntp.org"), Error);
}

TEST(Resolver, IpDropLeavesDnsAlone) {
  Resolver r(SmallZone());
  r.SetIpDrop("bulb", "52.0.0.10");
  EXPECT_TRUE(r.IsDropped("bulb", Ipv4(52, 0, 0, 10)));
  EXPECT_FALSE(r.IsDropped("yi-cam", Ipv4(52, 0, 0, 10)));
  EXPECT_EQ(dns::AnswerAddresses(Ask(r, "tplinkcloud.com", "bulb")),
            std::vector<Ipv4>{Ipv4(52, 0, 0, 10)});
}

TEST(Resolver, RoundRobinIsSeeded) {
  Resolver a(SmallZone(), 5);
  Resolver b(SmallZone(), 5);
  std::set<std::uint32_t> firsts;
  for (int i = 0; i < 6; ++i) {
    const auto x = dns::AnswerAddresses(Ask(a, "ntp.org", "bulb"));
    const auto y = dns::AnswerAddresses(Ask(b, "ntp.org", "bulb"));
    ASSERT_EQ(x, y);
    ASSERT_EQ(x.size(), 2u);
    firsts.insert(x[0].value());
  }
  EXPECT_EQ(firsts.size(), 2u);
}

TEST(Resolver, UnsupportedQuestions) {
  Resolver r(SmallZone());
  const auto aaaa = Ask(r, "ntp.org", "bulb", dns::type::kAaaa);
  EXPECT_EQ(aaaa.header.rcode, Rcode::kNoError);
  EXPECT_TRUE(aaaa.answers.empty());
  EXPECT_EQ(Ask(r, "ntp.org", "bulb", dns::type::kMx).header.rcode, Rcode::kNotImp);

  Message chaos = dns::MakeQuery(9, "ntp.org");
  chaos.questions[0].qclass = 3;
  EXPECT_EQ(r.Resolve(chaos, "bulb").header.rcode, Rcode::kNotImp);

  Message notify = dns::MakeQuery(9, "ntp.org");
  notify.header.opcode = 4;
  EXPECT_EQ(r.Resolve(notify, "bulb").header.rcode, Rcode::kNotImp);

  Message two = dns::MakeQuery(9, "ntp.org");
  two.questions.push_back(two.questions[0]);
  EXPECT_EQ(r.Resolve(two, "bulb").header.rcode, Rcode::kFormErr);

  const std::vector<std::uint8_t> junk = {0xAB, 0xCD, 0xFF};
  const auto formerr = dns::Decode(r.HandleWire(junk, "bulb"));
  EXPECT_EQ(formerr.header.rcode, Rcode::kFormErr);
  EXPECT_EQ(formerr.header.id, 0xABCD);
}

TEST(Resolver, RulesSerializeRoundTrip) {
  Resolver r(SmallZone());
  r.SetBlock("bulb", "ntp.org");
  r.SetIpDrop(kAllDevices, "210.72.145.44");
  const auto rules = r.Rules();
  EXPECT_EQ(ParseRules(SerializeRules(rules)), rules);
  Resolver other(SmallZone());
  other.ReplaceRules(rules);
  EXPECT_TRUE(IsSinkhole(Ask(other, "ntp.org", "bulb")));
  EXPECT_TRUE(other.IsDropped("anyone", Ipv4(210, 72, 145, 44)));
  // New ids continue after the restored ones.
  EXPECT_GT(other.SetBlock("yi-cam", "ntp.org"), rules.back().id);
}

TEST(Resolver, ViewIsolationUnderConcurrentChurn) {
  const Zone zone = testing::FixtureZone();
  Resolver r(zone, 1);
  std::vector<std::string> names;
  for (const auto& e : zone.entries()) names.push_back(e.name);

  std::atomic<bool> stop{false};
  std::atomic<int> violations{0};
  std::atomic<int> queries{0};
  std::thread churn([&] {
    std::mt19937_64 rng(2);
    while (!stop.load()) {
      const auto id = r.SetBlock("bulb", names[rng() % names.size()]);
      std::this_thread::yield();
      r.ClearRule(id);
    }
  });
  auto worker = [&](std::string device, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 250; ++i) {
      const std::string& name = names[rng() % names.size()];
      const auto m = Ask(r, name, device);
      ++queries;
      const bool sinkhole = IsSinkhole(m);
      const auto* entry = zone.Find(name);
      const bool zone_answer = m.header.rcode == Rcode::kNoError &&
                               m.answers.size() == entry->addresses.size() &&
                               m.answers[0].ttl == entry->ttl;
      if (device == "bulb" ? !(sinkhole || zone_answer) : !zone_answer) ++violations;
    }
  };
  std::vector<std::thread> workers;
  workers.emplace_back(worker, "bulb", 10);
  workers.emplace_back(worker, "yi-cam", 11);
  workers.emplace_back(worker, "bulb", 12);
  workers.emplace_back(worker, "bosiwo-cam", 13);
  for (auto& w : workers) w.join();
  stop = true;
  churn.join();
  EXPECT_EQ(queries.load(), 1000);
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(r.rule_count(), 0u);
}

TEST(Zone, ParseAndSerialize) {
  const Zone zone = Zone::Parse(R"({"Ntp.org": {"addresses": ["1.2.3.4"], "ttl": 5}})");
  ASSERT_NE(zone.Find("NTP.ORG"), nullptr);
  EXPECT_EQ(zone.Find("ntp.org")->ttl, 5u);
  EXPECT_EQ(zone.NameForAddress(Ipv4(1, 2, 3, 4)), "ntp.org");
  EXPECT_FALSE(zone.NameForAddress(Ipv4(4, 3, 2, 1)));
  EXPECT_EQ(Zone::Parse(zone.Serialize()).Serialize(), zone.Serialize());
  EXPECT_THROW(Zone::Parse(R"({"a.com": {"addresses": []}})"), Error);
  EXPECT_THROW(Zone::Parse(R"({"a.com": {"addresses": ["1.2.3.4"], "ttl": -1}})"), Error);
}

TEST(UdpServer, ServesOverLoopback) {
  Resolver r(SmallZone());
  r.SetBlock("bulb", "ntp.org");
  UdpDnsServer anonymous(r, 0);
  anonymous.Start();
  UdpDnsServer viewed(r, 0, {{Ipv4::Loopback(), "bulb"}});
  viewed.Start();

  const auto query = dns::Encode(dns::MakeQuery(77, "ntp.org"));
  const auto plain = dns::Decode(QueryUdp(anonymous.port(), query));
  EXPECT_EQ(plain.header.id, 77);
  EXPECT_EQ(plain.answers.size(), 2u);
  const auto sink = dns::Decode(QueryUdp(viewed.port(), query));
  EXPECT_TRUE(IsSinkhole(sink));

  const std::vector<std::uint8_t> junk = {0x00, 0x05, 0x01};
  EXPECT_EQ(dns::Decode(QueryUdp(viewed.port(), junk)).header.rcode, Rcode::kFormErr);
  EXPECT_EQ(viewed.served(), 2u);
  anonymous.Stop();
  viewed.Stop();
}

}  // namespace
}  // namespace iotrim::dnsctl
