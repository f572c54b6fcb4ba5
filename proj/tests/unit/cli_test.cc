#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "iotrim/cli/commands.h"
#include "iotrim/cli/lab_config.h"
#include "iotrim/error.h"
#include "test_support.h"

namespace iotrim::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), {"iotrim", "--config", testing::Fixture("lab.json").string()});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

bool Contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

TEST(LabConfig, BundledConfigLoads) {
  const auto lab = LoadLab(LoadLabConfig(testing::Fixture("lab.json")));
  ASSERT_EQ(lab.models.size(), 3u);
  EXPECT_NE(lab.Find("yi-cam"), nullptr);
  EXPECT_EQ(lab.Find("nope"), nullptr);
  EXPECT_EQ(lab.campaign.repetitions, 30);
  EXPECT_DOUBLE_EQ(lab.config.scale, 0.001);
}

TEST(LabConfig, RejectsUnknownKeys) {
  EXPECT_THROW(ParseLabConfig(R"({"devices": [], "zone": "z", "ownership": "o",
                                  "campaign": "c", "colour": 1})",
                              "."),
               Error);
}

TEST(Cli, UsageErrors) {
  const auto unknown = Invoke({"trim", "--device", "toaster", "--scale", "1e-9"});
  EXPECT_EQ(unknown.code, kExitUsage);
  EXPECT_TRUE(Contains(unknown.err, "unknown device 'toaster'")) << unknown.err;
  EXPECT_EQ(Invoke({"trim", "--scale", "1e-9"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"report", "pie"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"--scale", "-1", "sweep", "--all"}).code, kExitUsage);
}

TEST(Cli, HelpExitsZero) {
  const auto help = Invoke({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_TRUE(Contains(help.out, "trim"));
}

TEST(Cli, SweepTable) {
  const auto text = Invoke({"--scale", "1e-9", "sweep", "--all"});
  ASSERT_EQ(text.code, kExitOk) << text.err;
  EXPECT_TRUE(Contains(text.out, "tplink-bulb")) << text.out;
  EXPECT_TRUE(Contains(text.out, "bosiwo-cam")) << text.out;

  const auto js = Invoke({"--scale", "1e-9", "--json", "sweep", "--device", "yi-cam"});
  ASSERT_EQ(js.code, kExitOk) << js.err;
  EXPECT_TRUE(Contains(js.out, "\"device\": \"yi-cam\"")) << js.out;
}

TEST(Cli, TrimWritesLedgerAndReports) {
  const auto dir = testing::ScratchDir("cli-trim");
  const auto run =
      Invoke({"--scale", "1e-9", "--out", dir.string(), "trim", "--device", "yi-cam"});
  ASSERT_EQ(run.code, kExitOk) << run.err;
  EXPECT_TRUE(Contains(run.out, "log.us.xiaoyi.com TCP/80   watch          WAN   ✓"))
      << run.out;
  EXPECT_TRUE(Contains(run.out, "2 destinations, 1 blockable")) << run.out;
  for (const char* f : {"destinations", "blockable", "traffic", "generalize"}) {
    EXPECT_TRUE(fs::exists(dir / "reports" / (std::string(f) + ".txt"))) << f;
    EXPECT_TRUE(fs::exists(dir / "reports" / (std::string(f) + ".json"))) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "ledger" / "epoch-0" / "yi-cam" / "experiments.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "alerts.log"));

  std::ifstream saved(dir / "reports" / "blockable.txt");
  std::stringstream buf;
  buf << saved.rdbuf();
  const auto report = Invoke({"--out", dir.string(), "report", "blockable"});
  ASSERT_EQ(report.code, kExitOk) << report.err;
  EXPECT_EQ(report.out, buf.str());
  EXPECT_EQ(Invoke({"--out", dir.string(), "report", "blockable"}).out, report.out);

  const auto diff = Invoke({"--out", dir.string(), "report", "diff"});
  EXPECT_EQ(diff.code, kExitUsage);
  EXPECT_TRUE(Contains(diff.err, "need two epochs")) << diff.err;

  const auto missing = Invoke({"--out", dir.string(), "report", "traffic", "--epoch", "7"});
  EXPECT_NE(missing.code, kExitOk);
}

TEST(Cli, TwoEpochsDiffEmpty) {
  const auto dir = testing::ScratchDir("cli-epochs");
  const auto run = Invoke({"--scale", "1e-9", "--out", dir.string(), "trim", "--device",
                           "tplink-bulb", "--epochs", "2"});
  ASSERT_EQ(run.code, kExitOk) << run.err;
  const auto diff = Invoke({"--out", dir.string(), "report", "diff"});
  ASSERT_EQ(diff.code, kExitOk) << diff.err;
  EXPECT_EQ(diff.out, "tplink-bulb 0 -> 1: no changes\n");
}

TEST(Cli, CorruptLedgerExitsWithIoCode) {
  const auto dir = testing::ScratchDir("cli-corrupt");
  ASSERT_EQ(Invoke({"--scale", "1e-9", "--out", dir.string(), "trim", "--device", "yi-cam"}).code,
            kExitOk);
  const auto path = dir / "ledger" / "epoch-0" / "yi-cam" / "experiments.jsonl";
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[2] = "{not json";
  {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto report = Invoke({"--out", dir.string(), "report", "blockable"});
  EXPECT_EQ(report.code, kExitIo);
  EXPECT_TRUE(Contains(report.err, "line 3")) << report.err;
  EXPECT_TRUE(Contains(report.err, "experiments.jsonl")) << report.err;
}

TEST(Cli, DnsAdmin) {
  const auto dir = testing::ScratchDir("cli-dns");
  const auto out = dir.string();
  const auto before = Invoke({"--out", out, "dns", "query", "ntp.org"});
  ASSERT_EQ(before.code, kExitOk) << before.err;
  EXPECT_FALSE(Contains(before.out, "127.0.0.1")) << before.out;

  const auto block = Invoke({"--out", out, "dns", "block", "ntp.org", "--device", "tplink-bulb"});
  ASSERT_EQ(block.code, kExitOk) << block.err;
  EXPECT_EQ(block.out, "1\n");

  EXPECT_EQ(Invoke({"--out", out, "dns", "query", "ntp.org", "--device", "tplink-bulb"}).out,
            "ntp.org rcode=0 127.0.0.1/ttl=0\n");
  EXPECT_FALSE(Contains(Invoke({"--out", out, "dns", "query", "ntp.org", "--device", "yi-cam"}).out,
                        "127.0.0.1"));
  EXPECT_TRUE(Contains(Invoke({"--out", out, "dns", "rules"}).out, "tplink-bulb"));

  EXPECT_EQ(Invoke({"--out", out, "dns", "unblock", "1"}).code, kExitOk);
  EXPECT_EQ(Invoke({"--out", out, "dns", "unblock", "1"}).code, kExitUsage);
  EXPECT_FALSE(Contains(
      Invoke({"--out", out, "dns", "query", "ntp.org", "--device", "tplink-bulb"}).out,
      "127.0.0.1"));
  EXPECT_EQ(Invoke({"--out", out, "dns", "drop", "not-an-ip"}).code, kExitUsage);
}

}  // namespace
}  // namespace iotrim::cli
