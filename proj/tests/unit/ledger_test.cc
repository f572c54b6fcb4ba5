#include <gtest/gtest.h>

#include <fstream>

#include "iotrim/capture/flow_log.h"
#include "iotrim/error.h"
#include "iotrim/netlab/lab.h"
#include "iotrim/orchestrator/batch.h"
#include "iotrim/orchestrator/ledger.h"
#include "test_support.h"

namespace iotrim::orchestrator {
namespace {

namespace fs = std::filesystem;

BatchOutcome YiCampaign(const std::string& label = "0") {
  BatchOptions options{testing::FixtureZone(), testing::QuickConfig(2), testing::kFastScale, 3};
  options.epoch_label = label;
  return RunCampaignsSerial({testing::FixtureModel("yi-cam")}, options).at(0);
}

void ExpectSameClassification(const Classification& a, const Classification& b) {
  EXPECT_EQ(a.device, b.device);
  EXPECT_EQ(a.epoch, b.epoch);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].key, b.entries[i].key);
    EXPECT_EQ(a.entries[i].verdict, b.entries[i].verdict);
    EXPECT_EQ(a.entries[i].evidence, b.entries[i].evidence);
  }
}

std::vector<std::string> Lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void WriteLines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

TEST(Ledger, RecordLinesRoundTrip) {
  const auto outcome = YiCampaign();
  for (const auto& r : outcome.result.records) {
    EXPECT_EQ(RecordFromLine(RecordToLine(r)), r);
  }
  for (const auto& w : outcome.result.windows) {
    EXPECT_EQ(WindowFromLine(WindowToLine(w)), w);
  }
  ExperimentRecord joint;
  joint.id = 9;
  joint.device = "d";
  joint.role = ExperimentRole::kJoint;
  joint.functionality = "switch";
  joint.mode = NetworkMode::kWan;
  joint.joint_blocked = {DestinationKey::ForName("a.com", Transport::kUdp, 123),
                         DestinationKey::ForAddress(Ipv4(1, 2, 3, 4), Transport::kIcmp, {})};
  EXPECT_EQ(RecordFromLine(RecordToLine(joint)), joint);
}

TEST(Ledger, WriteThenRead) {
  const auto root = testing::ScratchDir("ledger-rw");
  const auto outcome = YiCampaign();
  const auto ledger = ToLedger(outcome.result);
  WriteLedger(root, ledger, outcome.flows, outcome.dns);

  const auto dir = LedgerDir(root, "0", "yi-cam");
  EXPECT_EQ(dir, root / "epoch-0" / "yi-cam");
  for (const char* f : {"experiments.jsonl", "windows.jsonl", "flows.jsonl", "dns.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto lines = Lines(dir / "experiments.jsonl");
  ASSERT_EQ(lines.size(), ledger.records.size() + 2);
  EXPECT_NE(lines.back().find("\"classification\""), std::string::npos);

  const auto back = ReadDeviceLedger(dir);
  EXPECT_EQ(back.device, "yi-cam");
  EXPECT_EQ(back.epoch, "0");
  EXPECT_EQ(back.records, ledger.records);
  EXPECT_EQ(back.windows, ledger.windows);
  EXPECT_EQ(back.aborted, false);
  EXPECT_EQ(back.off_duration, 120);
  ExpectSameClassification(back.classification, ledger.classification);

  std::ifstream flows(dir / "flows.jsonl");
  EXPECT_EQ(capture::ReadFlowLog(flows), outcome.flows);
}

TEST(Ledger, CorruptLineReportsFileAndLine) {
  const auto root = testing::ScratchDir("ledger-corrupt");
  const auto outcome = YiCampaign();
  WriteLedger(root, ToLedger(outcome.result), outcome.flows, outcome.dns);
  const auto path = LedgerDir(root, "0", "yi-cam") / "experiments.jsonl";
  auto lines = Lines(path);
  lines[3] = lines[3].substr(0, lines[3].size() / 2);
  WriteLines(path, lines);
  try {
    ReadLedgers(root);
    FAIL() << "corrupt ledger accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("experiments.jsonl"), std::string::npos);
  }
}

TEST(Ledger, MissingSummaryIsAnError) {
  const auto root = testing::ScratchDir("ledger-trunc");
  const auto outcome = YiCampaign();
  WriteLedger(root, ToLedger(outcome.result), outcome.flows, outcome.dns);
  const auto path = LedgerDir(root, "0", "yi-cam") / "experiments.jsonl";
  auto lines = Lines(path);
  lines.pop_back();
  WriteLines(path, lines);
  EXPECT_THROW(ReadDeviceLedger(LedgerDir(root, "0", "yi-cam")), ParseError);
}

TEST(Ledger, WindowCorruptionReportsLine) {
  const auto root = testing::ScratchDir("ledger-window");
  const auto outcome = YiCampaign();
  WriteLedger(root, ToLedger(outcome.result), outcome.flows, outcome.dns);
  const auto path = LedgerDir(root, "0", "yi-cam") / "windows.jsonl";
  auto lines = Lines(path);
  lines[1] = R"({"id": "seven"})";
  WriteLines(path, lines);
  try {
    ReadDeviceLedger(LedgerDir(root, "0", "yi-cam"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Ledger, EpochsSortNumerically) {
  const auto root = testing::ScratchDir("ledger-epochs");
  for (const char* label : {"10", "2", "1"}) {
    const auto outcome = YiCampaign(label);
    WriteLedger(root, ToLedger(outcome.result), outcome.flows, outcome.dns);
  }
  EXPECT_EQ(LedgerEpochs(root), (std::vector<std::string>{"1", "2", "10"}));
  const auto all = ReadLedgers(root);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].epoch, "1");
  EXPECT_EQ(all[2].epoch, "10");
  EXPECT_THROW(LedgerEpochs(root / "nope"), Error);
}

}  // namespace
}  // namespace iotrim::orchestrator
