#include "iotrim/orchestrator/ledger.h"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "core/json_codec.h"
#include "iotrim/capture/flow_log.h"
#include "iotrim/error.h"

namespace iotrim::orchestrator {
namespace {

using json_codec::json;

constexpr std::string_view kEpochPrefix = "epoch-";

json RecordToJson(const ExperimentRecord& r) {
  json j{{"type", "experiment"},
         {"id", r.id},
         {"device", r.device},
         {"kind", std::string(ToString(r.kind))},
         {"role", std::string(ToString(r.role))},
         {"functionality", nullptr},
         {"mode", nullptr},
         {"blocked", nullptr},
         {"window", r.window},
         {"validated", r.validated},
         {"verdict", nullptr},
         {"attempt", r.attempt},
         {"at", r.at}};
  if (r.functionality) j["functionality"] = *r.functionality;
  if (r.mode) j["mode"] = std::string(ToString(*r.mode));
  if (r.blocked) j["blocked"] = json_codec::KeyToJson(*r.blocked);
  if (!r.joint_blocked.empty()) {
    json joint = json::array();
    for (const auto& key : r.joint_blocked) joint.push_back(json_codec::KeyToJson(key));
    j["joint_blocked"] = std::move(joint);
  }
  if (r.verdict) j["verdict"] = std::string(ToString(*r.verdict));
  return j;
}

ExperimentRecord RecordFromJson(const json& j) {
  constexpr std::string_view kContext = "experiment record";
  json_codec::RequireOnlyKeys(
      j,
      {"type", "id", "device", "kind", "role", "functionality", "mode", "blocked",
       "joint_blocked", "window", "validated", "verdict", "attempt", "at"},
      kContext);
  if (json_codec::RequiredString(j, "type", kContext) != "experiment") {
    throw Error(ErrorCode::kValidation, "expected an experiment record");
  }
  ExperimentRecord r;
  r.id = json_codec::Required(j, "id", kContext).get<std::uint64_t>();
  r.device = json_codec::RequiredString(j, "device", kContext);
  r.kind = ParseExperimentKind(json_codec::RequiredString(j, "kind", kContext));
  r.role = ParseExperimentRole(json_codec::RequiredString(j, "role", kContext));
  if (const json& f = json_codec::Required(j, "functionality", kContext); !f.is_null()) {
    r.functionality = f.get<std::string>();
  }
  if (const json& m = json_codec::Required(j, "mode", kContext); !m.is_null()) {
    r.mode = ParseNetworkMode(m.get<std::string>());
  }
  if (const json& b = json_codec::Required(j, "blocked", kContext); !b.is_null()) {
    r.blocked = json_codec::KeyFromJson(b, kContext);
  }
  if (j.contains("joint_blocked")) {
    for (const json& k : j["joint_blocked"]) {
      r.joint_blocked.push_back(json_codec::KeyFromJson(k, kContext));
    }
  }
  r.window = json_codec::Required(j, "window", kContext).get<std::uint64_t>();
  r.validated = json_codec::Required(j, "validated", kContext).get<bool>();
  if (const json& v = json_codec::Required(j, "verdict", kContext); !v.is_null()) {
    r.verdict = ParseExperimentVerdict(v.get<std::string>());
  }
  if (r.validated != r.verdict.has_value()) {
    throw Error(ErrorCode::kValidation, "verdict must be present iff validated");
  }
  if (r.kind == ExperimentKind::kInteraction && (!r.functionality || !r.mode)) {
    throw Error(ErrorCode::kValidation,
                "interaction records carry functionality and mode");
  }
  r.attempt = json_codec::Required(j, "attempt", kContext).get<int>();
  r.at = json_codec::RequiredNumber(j, "at", kContext);
  return r;
}

json StatsToJson(const capture::DestinationStats& s) {
  json j = json_codec::KeyToJson(s.key);
  j["flows"] = s.flows;
  j["bytes"] = s.bytes;
  j["first_seen"] = s.first_seen;
  return j;
}

capture::DestinationStats StatsFromJson(const json& j) {
  constexpr std::string_view kContext = "window destination";
  capture::DestinationStats s;
  s.key = json_codec::KeyFromJson(j, kContext, {"flows", "bytes", "first_seen"});
  s.flows = json_codec::Required(j, "flows", kContext).get<std::uint64_t>();
  s.bytes = json_codec::Required(j, "bytes", kContext).get<std::uint64_t>();
  s.first_seen = json_codec::RequiredNumber(j, "first_seen", kContext);
  return s;
}

json WindowToJson(const WindowSummary& w) {
  json destinations = json::array();
  for (const auto& s : w.destinations) destinations.push_back(StatsToJson(s));
  return json{{"id", w.id},
              {"device", w.device},
              {"record", w.record},
              {"opened_at", w.opened_at},
              {"closed_at", w.closed_at},
              {"queries", w.queries},
              {"destinations", std::move(destinations)}};
}

WindowSummary WindowFromJson(const json& j) {
  constexpr std::string_view kContext = "window summary";
  json_codec::RequireOnlyKeys(j, {"id", "device", "record", "opened_at", "closed_at",
                                  "queries", "destinations"},
                              kContext);
  WindowSummary w;
  w.id = json_codec::Required(j, "id", kContext).get<std::uint64_t>();
  w.device = json_codec::RequiredString(j, "device", kContext);
  w.record = json_codec::Required(j, "record", kContext).get<std::uint64_t>();
  w.opened_at = json_codec::RequiredNumber(j, "opened_at", kContext);
  w.closed_at = json_codec::RequiredNumber(j, "closed_at", kContext);
  w.queries = json_codec::Required(j, "queries", kContext).get<std::vector<std::string>>();
  for (const json& s : json_codec::Required(j, "destinations", kContext)) {
    w.destinations.push_back(StatsFromJson(s));
  }
  return w;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream OpenIn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return in;
}

// Numeric labels sort numerically, everything else lexically after them.
bool EpochLess(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s, long long& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  long long va = 0, vb = 0;
  const bool na = numeric(a, va), nb = numeric(b, vb);
  if (na && nb) return va < vb;
  if (na != nb) return na;
  return a < b;
}

}  // namespace

DeviceLedger ToLedger(const CampaignResult& result) {
  return DeviceLedger{result.device,        result.epoch,   result.records,
                      result.windows,       result.classification,
                      result.aborted,       result.abort_reason,
                      result.off_duration,  result.joint_passed};
}

std::string RecordToLine(const ExperimentRecord& record) {
  return RecordToJson(record).dump();
}

ExperimentRecord RecordFromLine(std::string_view line) {
  return RecordFromJson(json_codec::ParseText(line, "experiment record"));
}

std::string WindowToLine(const WindowSummary& window) {
  return WindowToJson(window).dump();
}

WindowSummary WindowFromLine(std::string_view line) {
  return WindowFromJson(json_codec::ParseText(line, "window summary"));
}

std::filesystem::path LedgerDir(const std::filesystem::path& root,
                                std::string_view epoch, std::string_view device) {
  return root / (std::string(kEpochPrefix) + std::string(epoch)) / std::string(device);
}

void WriteLedger(const std::filesystem::path& root, const DeviceLedger& ledger,
                 std::span<const capture::FlowRecord> flows,
                 std::span<const capture::DnsEvent> dns) {
  const auto dir = LedgerDir(root, ledger.epoch, ledger.device);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = OpenOut(dir / "experiments.jsonl");
    for (const auto& r : ledger.records) out << RecordToLine(r) << '\n';
    json status{{"type", "campaign"},
                {"device", ledger.device},
                {"epoch", ledger.epoch},
                {"aborted", ledger.aborted},
                {"abort_reason", ledger.abort_reason},
                {"off_duration", ledger.off_duration},
                {"joint_passed", nullptr}};
    if (ledger.joint_passed) status["joint_passed"] = *ledger.joint_passed;
    out << status.dump() << '\n';
    out << json_codec::ClassificationToJson(ledger.classification).dump() << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed in " + dir.string());
  }
  {
    auto out = OpenOut(dir / "windows.jsonl");
    for (const auto& w : ledger.windows) out << WindowToLine(w) << '\n';
  }
  {
    auto out = OpenOut(dir / "flows.jsonl");
    capture::WriteFlowLog(out, flows);
  }
  {
    auto out = OpenOut(dir / "dns.jsonl");
    capture::WriteDnsLog(out, dns);
  }
}

DeviceLedger ReadDeviceLedger(const std::filesystem::path& dir) {
  DeviceLedger ledger;
  bool have_status = false;
  bool have_classification = false;
  {
    const auto path = dir / "experiments.jsonl";
    auto in = OpenIn(path);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        if (have_classification) {
          throw Error(ErrorCode::kValidation, "content after the classification object");
        }
        const json j = json_codec::ParseText(line, "ledger line");
        const std::string type =
            j.is_object() && j.contains("type") && j["type"].is_string()
                ? j["type"].get<std::string>()
                : "";
        if (type == "experiment") {
          ledger.records.push_back(RecordFromJson(j));
        } else if (type == "campaign") {
          json_codec::RequireOnlyKeys(j, {"type", "device", "epoch", "aborted",
                                          "abort_reason", "off_duration", "joint_passed"},
                                      "campaign status");
          ledger.device = json_codec::RequiredString(j, "device", "campaign status");
          ledger.epoch = json_codec::RequiredString(j, "epoch", "campaign status");
          ledger.aborted = json_codec::Required(j, "aborted", "campaign status").get<bool>();
          ledger.abort_reason = json_codec::RequiredString(j, "abort_reason", "campaign status");
          ledger.off_duration = json_codec::RequiredNumber(j, "off_duration", "campaign status");
          if (const json& jp = json_codec::Required(j, "joint_passed", "campaign status");
              !jp.is_null()) {
            ledger.joint_passed = jp.get<bool>();
          }
          have_status = true;
        } else if (type == "classification") {
          ledger.classification = json_codec::ClassificationFromJson(j);
          have_classification = true;
        } else {
          throw Error(ErrorCode::kValidation, "unknown ledger line type '" + type + "'");
        }
      } catch (const json::exception& e) {
        throw ParseError(number, path.string() + ": " + e.what());
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(number, path.string() + ": " + e.what());
      }
    }
    if (!have_status || !have_classification) {
      throw ParseError(number + 1, path.string() +
                                       ": missing campaign status or classification");
    }
  }
  {
    const auto path = dir / "windows.jsonl";
    auto in = OpenIn(path);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        ledger.windows.push_back(WindowFromLine(line));
      } catch (const json::exception& e) {
        throw ParseError(number, path.string() + ": " + e.what());
      } catch (const Error& e) {
        throw ParseError(number, path.string() + ": " + e.what());
      }
    }
  }
  return ledger;
}

std::vector<std::string> LedgerEpochs(const std::filesystem::path& root) {
  std::vector<std::string> epochs;
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) {
    throw Error(ErrorCode::kIo, "no ledger at " + root.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with(kEpochPrefix)) {
      epochs.push_back(name.substr(kEpochPrefix.size()));
    }
  }
  std::sort(epochs.begin(), epochs.end(), EpochLess);
  return epochs;
}

std::vector<DeviceLedger> ReadLedgers(const std::filesystem::path& root) {
  std::vector<DeviceLedger> out;
  for (const auto& epoch : LedgerEpochs(root)) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(
             root / (std::string(kEpochPrefix) + epoch))) {
      if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) out.push_back(ReadDeviceLedger(dir));
  }
  return out;
}

}  // namespace iotrim::orchestrator
