#include <gtest/gtest.h>

#include <random>
#include <unordered_set>

#include "iotrim/core/classification.h"
#include "iotrim/core/destination.h"
#include "iotrim/core/device_model.h"
#include "iotrim/core/ipv4.h"
#include "iotrim/core/public_suffix.h"
#include "iotrim/error.h"
#include "test_support.h"

namespace iotrim {
namespace {

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(Ipv4, ParsesStrictDottedQuad) {
  EXPECT_EQ(Ipv4::Parse("210.72.145.44"), Ipv4(210, 72, 145, 44));
  EXPECT_EQ(Ipv4::Parse("0.0.0.0").value(), 0u);
  EXPECT_EQ(Ipv4(127, 0, 0, 1).ToString(), "127.0.0.1");
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.1.1.1", "01.2.3.4", " 1.2.3.4",
                          "1..2.3", "a.b.c.d"}) {
    EXPECT_FALSE(Ipv4::TryParse(bad)) << bad;
  }
  EXPECT_EQ(CodeOf([] { Ipv4::Parse("1.2.3"); }), ErrorCode::kValidation);
}

TEST(Ipv4, PrefixContainment) {
  const auto p = Ipv4Prefix::Parse("52.0.0.0/8");
  EXPECT_TRUE(p.Contains(Ipv4::Parse("52.1.2.3")));
  EXPECT_FALSE(p.Contains(Ipv4::Parse("53.0.0.1")));
  EXPECT_TRUE(Ipv4Prefix::Parse("0.0.0.0/0").Contains(Ipv4(9, 9, 9, 9)));
  EXPECT_EQ(p.ToString(), "52.0.0.0/8");
  EXPECT_EQ(CodeOf([] { Ipv4Prefix::Parse("52.0.0.0/33"); }), ErrorCode::kValidation);
}

TEST(DnsName, NormalizesCaseAndTrailingDot) {
  EXPECT_EQ(NormalizeDnsName("Log.US.XiaoYi.com."), "log.us.xiaoyi.com");
  EXPECT_EQ(CodeOf([] { NormalizeDnsName("a..b"); }), ErrorCode::kValidation);
  EXPECT_EQ(CodeOf([] { NormalizeDnsName(""); }), ErrorCode::kValidation);
  EXPECT_EQ(CodeOf([] { NormalizeDnsName(std::string(64, 'a') + ".com"); }),
            ErrorCode::kValidation);
  std::string long_name;
  while (long_name.size() < 254) long_name += "abcdefghi.";
  long_name += "com";
  EXPECT_FALSE(IsValidDnsName(long_name));
  EXPECT_EQ(CodeOf([&] { NormalizeDnsName(long_name); }), ErrorCode::kValidation);
}

TEST(DestinationKey, DifferentPortsAreDifferentDestinations) {
  const auto http = DestinationKey::ForName("log.us.xiaoyi.com", Transport::kTcp, 80);
  const auto https = DestinationKey::ForName("log.us.xiaoyi.com", Transport::kTcp, 443);
  EXPECT_NE(http, https);
  EXPECT_NE(std::hash<DestinationKey>{}(http), std::hash<DestinationKey>{}(https));
}

TEST(DestinationKey, TransportIsPartOfIdentity) {
  EXPECT_NE(DestinationKey::ForName("x.example.com", Transport::kTcp, 80),
            DestinationKey::ForName("x.example.com", Transport::kUdp, 80));
}

TEST(DestinationKey, AddressesOfOneNameCollapse) {
  AddressAttribution attribution;
  const std::vector<Ipv4> answers = {Ipv4::Parse("1.2.3.4"), Ipv4::Parse("5.6.7.8")};
  attribution.RecordAnswer("ntp.org", answers);
  const auto a = attribution.KeyFor(answers[0], Transport::kUdp, 123);
  const auto b = attribution.KeyFor(answers[1], Transport::kUdp, 123);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, DestinationKey::ForName("ntp.org", Transport::kUdp, 123));
}

TEST(DestinationKey, UnresolvedAddressBecomesPortlessLiteral) {
  AddressAttribution attribution;
  const auto key = attribution.KeyFor(Ipv4::Parse("210.72.145.44"), Transport::kIcmp,
                                      std::nullopt);
  EXPECT_TRUE(key.is_ip_literal());
  EXPECT_EQ(key.name(), "210.72.145.44");
  EXPECT_FALSE(key.port());
  EXPECT_EQ(key.ToString(), "210.72.145.44 ICMP");
  // A port on an ICMP observation is discarded.
  EXPECT_EQ(DestinationKey::Parse("210.72.145.44", Transport::kIcmp, 123), key);
}

TEST(DestinationKey, MakeFromObservation) {
  FlowObservation named{"NTP.org.", Ipv4(1, 2, 3, 4), Transport::kUdp, 123};
  EXPECT_EQ(MakeDestinationKey(named).ToString(), "ntp.org UDP/123");
  FlowObservation bare{std::nullopt, Ipv4(9, 8, 7, 6), Transport::kTcp, 443};
  const auto key = MakeDestinationKey(bare);
  EXPECT_TRUE(key.is_ip_literal());
  EXPECT_EQ(key.address(), Ipv4(9, 8, 7, 6));
}

TEST(DestinationKey, RejectsMalformedNamesAndMissingPorts) {
  EXPECT_EQ(CodeOf([] { DestinationKey::ForName("bad..name", Transport::kTcp, 1); }),
            ErrorCode::kValidation);
  EXPECT_EQ(CodeOf([] { DestinationKey::ForName("ok.com", Transport::kTcp, std::nullopt); }),
            ErrorCode::kValidation);
}

TEST(DestinationKey, EqualityHashAndOrderAgree) {
  std::mt19937_64 rng(7);
  std::vector<DestinationKey> keys;
  for (int i = 0; i < 300; ++i) {
    const int n = static_cast<int>(rng() % 4);
    const auto t = static_cast<Transport>(rng() % 3);
    const auto port = static_cast<std::uint16_t>(rng() % 3);
    keys.push_back(n == 3 ? DestinationKey::ForAddress(Ipv4(10, 0, 0, 1), t, port)
                          : DestinationKey::ForName("h" + std::to_string(n) + ".com", t,
                                                    port));
  }
  std::hash<DestinationKey> h;
  for (const auto& a : keys) {
    EXPECT_EQ(a, a);
    for (const auto& b : keys) {
      const bool eq = a == b;
      EXPECT_EQ(eq, (a <=> b) == 0);
      if (eq) EXPECT_EQ(h(a), h(b));
      EXPECT_EQ(eq, b == a);
    }
  }
  std::unordered_set<DestinationKey> set(keys.begin(), keys.end());
  EXPECT_LE(set.size(), 4u * 3u * 3u);
}

TEST(DestinationKey, Deterministic) {
  FlowObservation o{"api.us.xiaoyi.com", Ipv4(34, 213, 17, 87), Transport::kTcp, 443};
  EXPECT_EQ(MakeDestinationKey(o), MakeDestinationKey(o));
}

TEST(PublicSuffix, SecondLevelLabels) {
  EXPECT_EQ(SecondLevelLabel("log.us.xiaoyi.com"), "xiaoyi.com");
  EXPECT_EQ(SecondLevelLabel("api.us.xiaoyi.com"), "xiaoyi.com");
  EXPECT_EQ(SecondLevelLabel("pool.ntp.org"), "ntp.org");
  EXPECT_EQ(SecondLevelLabel("ntp.org"), "ntp.org");
  EXPECT_EQ(SecondLevelLabel("amazonaws.com"), "amazonaws.com");
  EXPECT_EQ(SecondLevelLabel("www.bbc.co.uk"), "bbc.co.uk");
  EXPECT_EQ(CodeOf([] { SecondLevelLabel("210.72.145.44"); }), ErrorCode::kNotApplicable);
  EXPECT_EQ(CodeOf([] { SecondLevelLabel("co.uk"); }), ErrorCode::kNotApplicable);
}

TEST(PublicSuffix, BundledSnapshotIsVersioned) {
  const auto& psl = PublicSuffixList::Bundled();
  EXPECT_GT(psl.rule_count(), 1000u);
  EXPECT_NE(psl.version(), "custom");
  EXPECT_FALSE(psl.version().empty());
}

TEST(PublicSuffix, WildcardAndExceptionRules) {
  const auto psl = PublicSuffixList::FromText("// test\ncom\n*.ck\n!www.ck\n");
  EXPECT_EQ(psl.PublicSuffix("a.b.ck"), "b.ck");
  EXPECT_EQ(psl.RegistrableDomain("x.a.b.ck"), "a.b.ck");
  EXPECT_EQ(psl.PublicSuffix("www.ck"), "ck");
  EXPECT_EQ(psl.RegistrableDomain("www.ck"), "www.ck");
  // Implicit "*" rule.
  EXPECT_EQ(psl.RegistrableDomain("host.example.zz"), "example.zz");
}

TEST(PublicSuffix, SharedRegistrableDomainSharesLabel) {
  const std::vector<std::string> hosts = {"a.xiaoyi.com", "b.c.xiaoyi.com", "xiaoyi.com",
                                          "log.us.xiaoyi.com"};
  for (const auto& x : hosts) {
    for (const auto& y : hosts) EXPECT_EQ(SecondLevelLabel(x), SecondLevelLabel(y));
  }
}

TEST(Classification, FoldVerdict) {
  EXPECT_EQ(FoldVerdict(3, 0), Verdict::kBlockableAll);
  EXPECT_EQ(FoldVerdict(0, 3), Verdict::kUnblockable);
  EXPECT_EQ(FoldVerdict(1, 1), Verdict::kBlockableSome);
  EXPECT_EQ(CodeOf([] { FoldVerdict(0, 0); }), ErrorCode::kPrecondition);
  for (auto v : {Verdict::kBlockableAll, Verdict::kBlockableSome, Verdict::kUnblockable}) {
    EXPECT_EQ(ParseVerdict(ToString(v)), v);
  }
}

TEST(DeviceModel, FixturesLoadAndValidate) {
  const auto models = testing::FixtureModels();
  ASSERT_EQ(models.size(), 3u);
  EXPECT_EQ(models[0].id, "tplink-bulb");
  EXPECT_EQ(models[0].DeclaredDestinations().size(), 5u);
  EXPECT_EQ(models[0].category, DeviceCategory::kBulb);
  EXPECT_EQ(models[2].DeclaredDestinations().back().ToString(), "210.72.145.44 ICMP");
  for (const auto& m : models) {
    EXPECT_EQ(ParseDeviceModel(SerializeDeviceModel(m)).id, m.id);
    EXPECT_EQ(SerializeDeviceModel(ParseDeviceModel(SerializeDeviceModel(m))),
              SerializeDeviceModel(m));
  }
}

TEST(DeviceModel, StateSurface) {
  const auto bulb = testing::FixtureModel("tplink-bulb");
  EXPECT_EQ(bulb.StateFields(), (std::vector<std::string>{"clock", "light"}));
  EXPECT_EQ(bulb.InitialState().at("light"), "off");
  EXPECT_EQ(CodeOf([&] { bulb.Functionality("dance"); }), ErrorCode::kNotFound);
}

TEST(DeviceModel, RejectsUnknownKeys) {
  const std::string text = R"({"id": "x", "label": "x", "category": "other",
    "mac": "02:00:00:00:00:01", "boot_contacts": [], "functionalities": [],
    "firmware": "1.0"})";
  EXPECT_EQ(CodeOf([&] { ParseDeviceModel(text); }), ErrorCode::kValidation);
}

TEST(DeviceModel, RejectsUndeclaredCriticalDestination) {
  const std::string text = R"({"id": "x", "label": "x", "category": "other",
    "mac": "02:00:00:00:00:01", "boot_contacts": [],
    "functionalities": [{"name": "f", "modes": ["LAN"], "contacts": {"LAN": []},
      "critical": {"LAN": [{"name": "a.example.com", "transport": "TCP", "port": 443}]},
      "state_effect": {"field": "s", "value": "on", "initial": "off"}}]})";
  EXPECT_EQ(CodeOf([&] { ParseDeviceModel(text); }), ErrorCode::kValidation);
}

TEST(DeviceModel, RejectsBadContactParameters) {
  auto with_contact = [](const std::string& contact) {
    return R"({"id": "x", "label": "x", "category": "other", "mac": "02:00:00:00:00:01",
      "boot_contacts": [)" + contact + R"(], "functionalities": []})";
  };
  EXPECT_EQ(CodeOf([&] {
              ParseDeviceModel(with_contact(
                  R"({"name": "a.com", "transport": "TCP", "port": 1, "every": 0})"));
            }),
            ErrorCode::kValidation);
  EXPECT_EQ(CodeOf([&] {
              ParseDeviceModel(with_contact(
                  R"({"name": "a.com", "transport": "TCP", "port": 1, "bytes": -5})"));
            }),
            ErrorCode::kValidation);
  EXPECT_EQ(CodeOf([&] {
              ParseDeviceModel(with_contact(R"({"name": "a.com", "transport": "QUIC", "port": 1})"));
            }),
            ErrorCode::kValidation);
}

TEST(DeviceModel, MacAddress) {
  const auto mac = MacAddress::Parse("50:C7:BF:10:22:01");
  EXPECT_EQ(mac.ToString(), "50:c7:bf:10:22:01");
  EXPECT_EQ(CodeOf([] { MacAddress::Parse("50:c7:bf"); }), ErrorCode::kValidation);
}

TEST(DeviceModel, RandomModelsValidate) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto d = testing::MakeRandomDevice(rng);
    EXPECT_NO_THROW(d.model.Validate());
    EXPECT_NO_THROW(ParseDeviceModel(SerializeDeviceModel(d.model)));
  }
}

}  // namespace
}  // namespace iotrim
