#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "iotrim/analysis/generalize.h"
#include "iotrim/analysis/longitudinal.h"
#include "iotrim/analysis/ownership.h"
#include "iotrim/analysis/tables.h"
#include "iotrim/analysis/traffic.h"
#include "iotrim/error.h"
#include "test_support.h"

namespace iotrim::analysis {
namespace {

using orchestrator::WindowSummary;

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

DestinationKey K(const std::string& name, Transport t, std::optional<std::uint16_t> port) {
  return DestinationKey::Parse(name, t, port);
}

Classification Make(const std::string& device,
                    std::vector<std::pair<DestinationKey, Verdict>> entries,
                    const std::string& epoch = "0") {
  Classification c{device, epoch, {}};
  for (auto& [key, verdict] : entries) c.entries.push_back({key, verdict, {}});
  return c;
}

// Verdicts of the three fixture devices.
std::vector<Classification> FixtureVerdicts() {
  const auto all = Verdict::kBlockableAll;
  const auto none = Verdict::kUnblockable;
  return {
      Make("tplink-bulb", {{K("ntp.org", Transport::kUdp, 123), all},
                           {K("nist.gov", Transport::kUdp, 123), all},
                           {K("tplinkra.com", Transport::kTcp, 443), none},
                           {K("tplinkcloud.com", Transport::kTcp, 443), none},
                           {K("amazonaws.com", Transport::kTcp, 443), none}}),
      Make("yi-cam", {{K("api.us.xiaoyi.com", Transport::kTcp, 443), none},
                      {K("log.us.xiaoyi.com", Transport::kTcp, 80), all}}),
      Make("bosiwo-cam", {{K("vimtag.com", Transport::kTcp, 443), none},
                          {K("amazonaws.com", Transport::kTcp, 443), none},
                          {K("210.72.145.44", Transport::kIcmp, std::nullopt), all}}),
  };
}

OwnershipTable FixtureOwnership() { return OwnershipTable::Load(testing::Fixture("ownership.json")); }

TEST(Ownership, LongestPrefixWins) {
  const auto table = FixtureOwnership();
  const auto cnic = table.Lookup(Ipv4::Parse("210.72.145.44"));
  EXPECT_EQ(cnic.organization, "Computer Network Information Center");
  EXPECT_EQ(cnic.registry, "APNIC");
  EXPECT_EQ(cnic.prefix.ToString(), "210.72.145.0/24");
  EXPECT_EQ(cnic.source, "ownership.json");
  EXPECT_EQ(table.Lookup(Ipv4::Parse("210.72.1.1")).organization,
            "China Science and Technology Network");
  EXPECT_EQ(table.Lookup(Ipv4::Parse("52.1.2.3")).organization, "Amazon.com, Inc.");
}

TEST(Ownership, UnknownAddressIsAnError) {
  const auto table = FixtureOwnership();
  EXPECT_EQ(CodeOf([&] { table.Lookup(Ipv4::Loopback()); }), ErrorCode::kUnknownOwner);
  EXPECT_FALSE(table.TryLookup(Ipv4::Loopback()));
  EXPECT_THROW(OwnershipTable::Parse(R"([{"prefix": "1.2.3.0/24"}])"), Error);
  EXPECT_THROW(OwnershipTable::Parse(
                   R"([{"prefix": "1.2.3.0/24", "organization": "x", "registry": "y", "asn": 1}])"),
               Error);
}

TEST(Ownership, LookupIsTotalOverFixtureAddresses) {
  const auto table = FixtureOwnership();
  const auto zone = testing::FixtureZone();
  for (const auto& e : zone.entries()) {
    for (auto a : e.addresses) EXPECT_TRUE(table.TryLookup(a)) << e.name;
  }
}

TEST(ServiceClass, BundledMap) {
  EXPECT_EQ(ServiceClass(K("ntp.org", Transport::kUdp, 123)), "NTP");
  EXPECT_EQ(ServiceClass(K("a.com", Transport::kTcp, 80)), "HTTP");
  EXPECT_EQ(ServiceClass(K("a.com", Transport::kTcp, 443)), "HTTPS");
  EXPECT_EQ(ServiceClass(K("a.com", Transport::kUdp, 53)), "DNS");
  EXPECT_EQ(ServiceClass(K("1.2.3.4", Transport::kIcmp, std::nullopt)), "ICMP");
  EXPECT_EQ(ServiceClass(K("a.com", Transport::kTcp, 123)), "OTHER");
}

TEST(Generalize, FixtureGroups) {
  const auto verdicts = FixtureVerdicts();
  const auto ownership = FixtureOwnership();
  const auto report = Generalize(verdicts, &ownership);
  const auto* ntp = report.Find(Grouping::kServiceClass, "NTP");
  ASSERT_NE(ntp, nullptr);
  EXPECT_EQ(ntp->consistency, Consistency::kAlwaysBlockable);
  EXPECT_EQ(ntp->members, 2u);
  const auto* aws = report.Find(Grouping::kSecondLevel, "amazonaws.com");
  ASSERT_NE(aws, nullptr);
  EXPECT_EQ(aws->consistency, Consistency::kNeverBlockable);
  EXPECT_EQ(aws->devices, (std::set<std::string>{"bosiwo-cam", "tplink-bulb"}));
  EXPECT_EQ(report.Find(Grouping::kSecondLevel, "xiaoyi.com")->consistency, Consistency::kMixed);
  EXPECT_EQ(report.Find(Grouping::kPort, "TCP/443")->consistency,
            Consistency::kNeverBlockable);
  EXPECT_EQ(report.Find(Grouping::kOrganization, "Computer Network Information Center")
                ->consistency,
            Consistency::kAlwaysBlockable);
  EXPECT_EQ(report.Find(Grouping::kDomain, "210.72.145.44"), nullptr);

  for (std::size_t i = 1; i < report.groups.size(); ++i) {
    const auto& a = report.groups[i - 1];
    const auto& b = report.groups[i];
    EXPECT_TRUE(std::tie(a.grouping, a.label) < std::tie(b.grouping, b.label));
  }
}

TEST(Generalize, UnknownOwnerGroup) {
  const auto verdicts = FixtureVerdicts();
  const auto report = Generalize(verdicts);
  EXPECT_NE(report.Find(Grouping::kOrganization, "unknown"), nullptr);
}

std::string Fingerprint(const GeneralizationReport& r) {
  return RenderGeneralization(r, Format::kJson);
}

TEST(Generalize, PermutationInvariant) {
  auto verdicts = FixtureVerdicts();
  const auto ownership = FixtureOwnership();
  const auto expected = Fingerprint(Generalize(verdicts, &ownership));
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(verdicts.begin(), verdicts.end(), rng);
    for (auto& c : verdicts) std::shuffle(c.entries.begin(), c.entries.end(), rng);
    EXPECT_EQ(Fingerprint(Generalize(verdicts, &ownership)), expected);
  }
}

TEST(Generalize, SingleMemberGroupKeepsVerdict) {
  for (auto v : {Verdict::kBlockableAll, Verdict::kUnblockable}) {
    const std::vector<Classification> one = {Make("d", {{K("a.example.com", Transport::kTcp, 8080), v}})};
    const auto report = Generalize(one);
    const auto expected = v == Verdict::kBlockableAll ? Consistency::kAlwaysBlockable
                                                      : Consistency::kNeverBlockable;
    ASSERT_FALSE(report.groups.empty());
    for (const auto& g : report.groups) {
      EXPECT_EQ(g.members, 1u);
      EXPECT_EQ(g.consistency, expected) << ToString(g.grouping);
    }
  }
  const std::vector<Classification> some = {
      Make("d", {{K("a.example.com", Transport::kTcp, 8080), Verdict::kBlockableSome}})};
  for (const auto& g : Generalize(some).groups) EXPECT_EQ(g.consistency, Consistency::kMixed);
}

TEST(Generalize, EachGroupAppearsOnce) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    std::vector<Classification> cs;
    for (int d = 0; d < 3; ++d) {
      auto dev = testing::MakeRandomDevice(rng, 6, 3, "dev" + std::to_string(d));
      Classification c{dev.model.id, "0", {}};
      for (const auto& key : dev.model.DeclaredDestinations()) {
        c.entries.push_back({key, static_cast<Verdict>(rng() % 3), {}});
      }
      cs.push_back(c);
    }
    const auto report = Generalize(cs);
    std::set<std::pair<Grouping, std::string>> seen;
    for (const auto& g : report.groups) {
      EXPECT_TRUE(seen.emplace(g.grouping, g.label).second);
    }
  }
}

TEST(CountDestinations, NineAndFour) {
  const auto verdicts = FixtureVerdicts();
  const auto count = CountDestinations(verdicts);
  EXPECT_EQ(count.destinations, 9u);
  EXPECT_EQ(count.blockable, 4u);
  EXPECT_EQ(SummaryLine(count), "9 destinations, 4 blockable");
}

TEST(Longitudinal, IdenticalEpochsDiffEmpty) {
  for (const auto& c : FixtureVerdicts()) {
    auto later = c;
    later.epoch = "1";
    const auto diff = LongitudinalDiff(c, later);
    EXPECT_TRUE(diff.empty());
    EXPECT_EQ(diff.epoch_a, "0");
    EXPECT_EQ(diff.epoch_b, "1");
    EXPECT_TRUE(LongitudinalDiff(c, c).empty());
  }
}

TEST(Longitudinal, AddedChangedRemoved) {
  const auto a = Make("d", {{K("x.com", Transport::kTcp, 443), Verdict::kBlockableAll},
                            {K("gone.com", Transport::kTcp, 443), Verdict::kUnblockable}});
  const auto b = Make("d", {{K("new.com", Transport::kTcp, 80), Verdict::kBlockableAll},
                            {K("x.com", Transport::kTcp, 443), Verdict::kUnblockable}},
                      "1");
  const auto diff = LongitudinalDiff(a, b);
  ASSERT_EQ(diff.changes.size(), 3u);
  EXPECT_EQ(diff.changes[0].ToString(), "added new.com TCP/80 BLOCKABLE_ALL");
  EXPECT_EQ(diff.changes[1].ToString(), "changed x.com TCP/443 BLOCKABLE_ALL -> UNBLOCKABLE");
  EXPECT_EQ(diff.changes[2].ToString(), "removed gone.com TCP/443 UNBLOCKABLE");
  EXPECT_EQ(diff.changes[1].before, Verdict::kBlockableAll);
  EXPECT_EQ(diff.changes[1].after, Verdict::kUnblockable);
}

TEST(Longitudinal, DeviceMismatch) {
  const auto a = Make("d", {});
  const auto b = Make("e", {});
  EXPECT_EQ(CodeOf([&] { LongitudinalDiff(a, b); }), ErrorCode::kMismatch);
}

WindowSummary Window(const std::string& device,
                     std::vector<std::pair<DestinationKey, std::uint64_t>> bytes) {
  WindowSummary w;
  w.device = device;
  for (auto& [key, b] : bytes) w.destinations.push_back({key, 1, b, 0});
  return w;
}

TEST(Traffic, RowsOnlyForBlockableEverywhere) {
  const auto verdicts = FixtureVerdicts();
  std::vector<WindowSummary> windows;
  for (const auto& c : verdicts) {
    std::vector<std::pair<DestinationKey, std::uint64_t>> bytes;
    for (const auto& e : c.entries) bytes.emplace_back(e.key, 100);
    windows.push_back(Window(c.device, bytes));
  }
  const auto rows = CharacterizeTraffic(verdicts, windows);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].key.name(), "ntp.org");
  EXPECT_EQ(rows[0].protocol, "NTP");
  EXPECT_EQ(rows[0].port, 123);
  EXPECT_EQ(rows[0].devices, 1u);
  EXPECT_DOUBLE_EQ(rows[0].share_percent, 20.0);
  EXPECT_EQ(rows[2].protocol, "TCP");
  EXPECT_DOUBLE_EQ(rows[2].share_percent, 50.0);
  EXPECT_EQ(rows[3].protocol, "ICMP");
  EXPECT_FALSE(rows[3].port);
  EXPECT_NEAR(rows[3].share_percent, 100.0 / 3, 1e-9);
}

TEST(Traffic, SharedDestinationCountsDevices) {
  const auto shared = K("pool.ntp.org", Transport::kUdp, 123);
  const auto other = K("a.example.com", Transport::kTcp, 443);
  const std::vector<Classification> cs = {
      Make("d1", {{shared, Verdict::kBlockableAll}, {other, Verdict::kUnblockable}}),
      Make("d2", {{shared, Verdict::kBlockableAll}})};
  const std::vector<WindowSummary> windows = {Window("d1", {{shared, 10}, {other, 70}}),
                                              Window("d2", {{shared, 20}}),
                                              Window("d3", {{other, 1000}})};
  const auto rows = CharacterizeTraffic(cs, windows);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].devices, 2u);
  EXPECT_DOUBLE_EQ(rows[0].share_percent, 30.0);
}

TEST(Traffic, VerdictNotAllEverywhereDropsRow) {
  const auto key = K("pool.ntp.org", Transport::kUdp, 123);
  const std::vector<Classification> cs = {Make("d1", {{key, Verdict::kBlockableAll}}),
                                          Make("d2", {{key, Verdict::kBlockableSome}})};
  const std::vector<WindowSummary> windows = {Window("d1", {{key, 10}})};
  EXPECT_TRUE(CharacterizeTraffic(cs, windows).empty());
}

TEST(Traffic, ZeroBytesIsUndefined) {
  const auto key = K("pool.ntp.org", Transport::kUdp, 123);
  const std::vector<Classification> cs = {Make("d1", {{key, Verdict::kBlockableAll}})};
  const std::vector<WindowSummary> windows = {Window("d1", {{key, 0}})};
  EXPECT_EQ(CodeOf([&] { CharacterizeTraffic(cs, windows); }), ErrorCode::kUndefinedShare);
}

TEST(Tables, AlignsByCodePoints) {
  TextTable t{{"destination", "ok"}, {{"ntp.org", "✓"}, {"tplinkcloud.com", "✗"}}};
  EXPECT_EQ(t.Render(),
            "destination      ok\n"
            "---------------  --\n"
            "ntp.org          ✓\n"
            "tplinkcloud.com  ✗\n");
}

TEST(Tables, TrafficTextAndJson) {
  const std::vector<TrafficRow> rows = {
      {K("ntp.org", Transport::kUdp, 123), 1, "NTP", 123, 1.5296},
      {K("210.72.145.44", Transport::kIcmp, std::nullopt), 1, "ICMP", std::nullopt, 0.1201}};
  const auto text = RenderTraffic(rows, Format::kText);
  EXPECT_NE(text.find("1.53"), std::string::npos) << text;
  EXPECT_NE(text.find("0.12"), std::string::npos) << text;
  const auto json = RenderTraffic(rows, Format::kJson);
  EXPECT_NE(json.find("\"share_percent\""), std::string::npos) << json;
  EXPECT_EQ(json, RenderTraffic(rows, Format::kJson));
}

TEST(Tables, DiffRendering) {
  const auto a = Make("d", {});
  const auto b = Make("d", {{K("new.com", Transport::kTcp, 80), Verdict::kBlockableAll}}, "1");
  const std::vector<ChangeSet> diffs = {LongitudinalDiff(a, b)};
  const auto text = RenderDiff(diffs, Format::kText);
  EXPECT_NE(text.find("added new.com TCP/80 BLOCKABLE_ALL"), std::string::npos) << text;
}

}  // namespace
}  // namespace iotrim::analysis
