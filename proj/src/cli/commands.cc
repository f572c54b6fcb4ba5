#include "iotrim/cli/commands.h"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "core/json_codec.h"
#include "iotrim/analysis/generalize.h"
#include "iotrim/analysis/longitudinal.h"
#include "iotrim/analysis/tables.h"
#include "iotrim/analysis/traffic.h"
#include "iotrim/cli/lab_config.h"
#include "iotrim/dnsctl/udp_server.h"
#include "iotrim/error.h"
#include "iotrim/orchestrator/batch.h"

#ifndef IOTRIM_DEFAULT_CONFIG
#define IOTRIM_DEFAULT_CONFIG "data/fixtures/lab.json"
#endif

namespace iotrim::cli {
namespace {

using json_codec::json;
namespace fs = std::filesystem;

const std::vector<std::string> kReportKinds = {"destinations", "blockable", "traffic",
                                               "generalize", "diff"};

std::atomic<bool> g_stop{false};

extern "C" void HandleStopSignal(int) { g_stop = true; }

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config = IOTRIM_DEFAULT_CONFIG;
  std::uint64_t seed = 0;
  double scale = 0;  // 0: take the lab config value
  bool json = false;
  std::string out;
  std::vector<std::string> devices;
  bool all = false;
  int epochs = 1;
  bool sweep_first = false;
  std::string kind;
  std::string ledger;
  std::string epoch;
  int dns_port = 5353;
  std::vector<std::string> views;
  double duration = 0;
  std::string name;
  std::string address;
  std::uint64_t rule_id = 0;
  std::string requester = std::string(dnsctl::kAllDevices);
};

fs::path OutputDir(const Options& o, const LabConfig& config) {
  return o.out.empty() ? config.output : fs::path(o.out);
}

std::vector<DeviceModel> SelectDevices(const Options& o, const LoadedLab& lab) {
  if (o.all && !o.devices.empty()) throw UsageError("use either --all or --device, not both");
  if (o.all) return lab.models;
  if (o.devices.empty()) throw UsageError("no devices selected; pass --device ID or --all");
  std::vector<DeviceModel> out;
  std::set<std::string> seen;
  for (const auto& id : o.devices) {
    const DeviceModel* model = lab.Find(id);
    if (!model) {
      std::string known;
      for (const auto& m : lab.models) known += (known.empty() ? "" : ", ") + m.id;
      throw UsageError("unknown device '" + id + "' (known: " + known + ")");
    }
    if (seen.insert(id).second) out.push_back(*model);
  }
  return out;
}

orchestrator::BatchOptions MakeBatch(const Options& o, const LoadedLab& lab) {
  orchestrator::BatchOptions b;
  b.zone = lab.zone;
  b.config = lab.campaign;
  b.scale = o.scale > 0 ? o.scale : lab.config.scale;
  b.seed = o.seed;
  b.sweep_first = o.sweep_first;
  return b;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void CreateDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<orchestrator::DeviceLedger> OfEpoch(
    const std::vector<orchestrator::DeviceLedger>& ledgers, const std::string& epoch) {
  std::vector<orchestrator::DeviceLedger> out;
  for (const auto& l : ledgers) {
    if (l.epoch == epoch) out.push_back(l);
  }
  return out;
}

int CmdSweep(const Options& o, std::ostream& out) {
  const LoadedLab lab = LoadLab(LoadLabConfig(o.config));
  const auto models = SelectDevices(o, lab);
  const auto reports = orchestrator::RunSweeps(models, MakeBatch(o, lab));
  out << analysis::RenderSweep(reports, o.json ? analysis::Format::kJson
                                               : analysis::Format::kText);
  return kExitOk;
}

int CmdTrim(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.epochs < 1) throw UsageError("--epochs must be >= 1");
  const LoadedLab lab = LoadLab(LoadLabConfig(o.config));
  const auto models = SelectDevices(o, lab);
  const fs::path root = OutputDir(o, lab.config);
  const fs::path ledger_root = root / "ledger";
  CreateDirs(ledger_root);
  CreateDirs(root / "reports");
  // A rerun replaces the previous ledgers of the same epochs only.
  for (int e = 0; e < o.epochs; ++e) {
    for (const auto& m : models) {
      std::error_code ec;
      fs::remove_all(orchestrator::LedgerDir(ledger_root, std::to_string(e), m.id), ec);
    }
  }

  std::ofstream alerts(root / "alerts.log", std::ios::trunc);
  if (!alerts) throw Error(ErrorCode::kIo, "cannot write " + (root / "alerts.log").string());
  std::mutex alert_mu;

  auto batch = MakeBatch(o, lab);
  batch.hooks.on_alert = [&](const orchestrator::Alert& a) {
    std::lock_guard lock(alert_mu);
    const std::string line = "ALERT device=" + a.device + " t=" +
                             std::to_string(a.at) + " " + a.message;
    err << line << std::endl;
    alerts << line << std::endl;
  };

  std::vector<std::string> aborted;
  for (int e = 0; e < o.epochs; ++e) {
    batch.epoch = e;
    batch.epoch_label = std::to_string(e);
    for (auto& outcome : orchestrator::RunCampaigns(models, batch)) {
      orchestrator::WriteLedger(ledger_root, orchestrator::ToLedger(outcome.result),
                                outcome.flows, outcome.dns);
      if (outcome.result.aborted) {
        aborted.push_back("epoch " + outcome.result.epoch + " " + outcome.result.device +
                          ": " + outcome.result.abort_reason);
      }
    }
  }

  // Reports come from the persisted ledgers so that `report` reproduces them.
  const auto ledgers = orchestrator::ReadLedgers(ledger_root);
  std::vector<orchestrator::DeviceLedger> selected;
  std::set<std::string> ids;
  for (const auto& m : models) ids.insert(m.id);
  for (const auto& l : ledgers) {
    if (ids.contains(l.device) && std::stoi(l.epoch) < o.epochs) selected.push_back(l);
  }
  std::vector<std::string> kinds = {"destinations", "blockable", "traffic", "generalize"};
  if (o.epochs > 1) kinds.push_back("diff");
  json combined = json::object();
  for (const auto& kind : kinds) {
    const std::string text = BuildReport(selected, kind, "0", false, &lab.ownership);
    const std::string js = BuildReport(selected, kind, "0", true, &lab.ownership);
    WriteText(root / "reports" / (kind + ".txt"), text);
    WriteText(root / "reports" / (kind + ".json"), js);
    if (o.json) {
      combined[kind] = json::parse(js);
    } else {
      out << "== " << kind << " ==\n" << text << "\n";
    }
  }
  std::vector<Classification> classifications;
  for (const auto& l : OfEpoch(selected, "0")) classifications.push_back(l.classification);
  const std::string summary =
      analysis::SummaryLine(analysis::CountDestinations(classifications));
  WriteText(root / "reports" / "summary.txt", summary + "\n");
  if (o.json) {
    combined["summary"] = summary;
    out << combined.dump(2) << "\n";
  } else {
    out << summary << "\n";
  }

  if (!aborted.empty()) {
    err << "campaign aborted (" << aborted.size() << "):\n";
    for (const auto& a : aborted) err << "  " << a << "\n";
    return kExitAbort;
  }
  return kExitOk;
}

int CmdReport(const Options& o, std::ostream& out) {
  fs::path ledger_root;
  std::optional<analysis::OwnershipTable> ownership;
  if (!o.ledger.empty()) {
    ledger_root = o.ledger;
  } else {
    ledger_root = OutputDir(o, LoadLabConfig(o.config)) / "ledger";
  }
  if (o.kind == "generalize") {
    ownership = analysis::OwnershipTable::Load(LoadLabConfig(o.config).ownership);
  }
  const auto ledgers = orchestrator::ReadLedgers(ledger_root);
  if (ledgers.empty()) throw Error(ErrorCode::kIo, "no campaigns under " + ledger_root.string());
  const std::string epoch = o.epoch.empty() ? ledgers.front().epoch : o.epoch;
  out << BuildReport(ledgers, o.kind, epoch, o.json, ownership ? &*ownership : nullptr);
  return kExitOk;
}

// ---- dns admin -----------------------------------------------------------

fs::path RulesPath(const Options& o) {
  return OutputDir(o, LoadLabConfig(o.config)) / "dns-rules.json";
}

std::vector<dnsctl::BlockRule> LoadRules(const fs::path& path) {
  if (!fs::exists(path)) return {};
  return dnsctl::ParseRules(json_codec::ReadFile(path, "rule file"));
}

void SaveRules(const fs::path& path, const std::vector<dnsctl::BlockRule>& rules) {
  CreateDirs(path.parent_path());
  WriteText(path, dnsctl::SerializeRules(rules) + "\n");
}

int CmdDnsEdit(const Options& o, std::ostream& out, const std::string& action) {
  const LabConfig config = LoadLabConfig(o.config);
  dnsctl::Resolver resolver(dnsctl::Zone::Load(config.zone), o.seed);
  const fs::path path = RulesPath(o);
  resolver.ReplaceRules(LoadRules(path));
  if (action == "block") {
    out << resolver.SetBlock(o.requester, o.name) << "\n";
  } else if (action == "drop") {
    out << resolver.SetIpDrop(o.requester, std::string_view(o.address)) << "\n";
  } else {
    resolver.ClearRule(o.rule_id);
  }
  SaveRules(path, resolver.Rules());
  return kExitOk;
}

int CmdDnsRules(const Options& o, std::ostream& out) {
  const auto rules = LoadRules(RulesPath(o));
  if (o.json) {
    out << dnsctl::SerializeRules(rules) << "\n";
    return kExitOk;
  }
  analysis::TextTable table{{"id", "device", "kind", "target"}, {}};
  for (const auto& r : rules) {
    table.rows.push_back({std::to_string(r.id), r.device, std::string(dnsctl::ToString(r.kind)),
                          r.target});
  }
  out << table.Render();
  return kExitOk;
}

// In-process through the wire path unless a server port is given.
int CmdDnsQuery(const Options& o, std::ostream& out) {
  const auto query = dns::Encode(dns::MakeQuery(0x1d5e, o.name));
  std::vector<std::uint8_t> reply;
  if (o.dns_port == 0) {
    const LabConfig config = LoadLabConfig(o.config);
    dnsctl::Resolver resolver(dnsctl::Zone::Load(config.zone), o.seed);
    resolver.ReplaceRules(LoadRules(RulesPath(o)));
    reply = resolver.HandleWire(query, o.requester);
  } else {
    reply = dnsctl::QueryUdp(static_cast<std::uint16_t>(o.dns_port), query);
  }
  const dns::Message message = dns::Decode(reply);
  const auto answers = dns::AnswerAddresses(message);
  if (o.json) {
    json j{{"name", o.name},
           {"rcode", static_cast<int>(message.header.rcode)},
           {"answers", json::array()}};
    for (const auto& rr : message.answers) {
      if (rr.rtype != dns::type::kA || rr.rdata.size() != 4) continue;
      j["answers"].push_back(
          {{"address", Ipv4(rr.rdata[0], rr.rdata[1], rr.rdata[2], rr.rdata[3]).ToString()},
           {"ttl", rr.ttl}});
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << o.name << " rcode=" << static_cast<int>(message.header.rcode);
  for (const auto& rr : message.answers) {
    if (rr.rtype != dns::type::kA || rr.rdata.size() != 4) continue;
    out << " " << Ipv4(rr.rdata[0], rr.rdata[1], rr.rdata[2], rr.rdata[3]).ToString()
        << "/ttl=" << rr.ttl;
  }
  out << "\n";
  return kExitOk;
}

int CmdDnsServe(const Options& o, std::ostream& out, std::ostream& err) {
  const LabConfig config = LoadLabConfig(o.config);
  dnsctl::Resolver resolver(dnsctl::Zone::Load(config.zone), o.seed);
  const fs::path path = RulesPath(o);
  resolver.ReplaceRules(LoadRules(path));
  std::map<Ipv4, std::string> views;
  for (const auto& v : o.views) {
    const auto eq = v.find('=');
    if (eq == std::string::npos) throw UsageError("--view expects ADDRESS=DEVICE, got '" + v + "'");
    views[Ipv4::Parse(v.substr(0, eq))] = v.substr(eq + 1);
  }
  if (o.dns_port < 0 || o.dns_port > 65535) throw UsageError("--dns-port out of range");
  dnsctl::UdpDnsServer server(resolver, static_cast<std::uint16_t>(o.dns_port), views);
  server.Start();
  out << "serving on 127.0.0.1:" << server.port() << std::endl;
  g_stop = false;
  std::signal(SIGINT, HandleStopSignal);
  std::signal(SIGTERM, HandleStopSignal);
  const auto start = std::chrono::steady_clock::now();
  auto stamp = fs::exists(path) ? fs::last_write_time(path) : fs::file_time_type{};
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (o.duration > 0 && std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                         start).count() >= o.duration) {
      break;
    }
    // Pick up rule edits made by `iotrim dns block|drop|unblock`.
    std::error_code ec;
    const auto now_stamp = fs::last_write_time(path, ec);
    if (!ec && now_stamp != stamp) {
      stamp = now_stamp;
      try {
        resolver.ReplaceRules(LoadRules(path));
      } catch (const Error& e) {
        err << "ignoring rule file: " << e.what() << std::endl;
      }
    }
  }
  server.Stop();
  out << "served " << server.served() << " queries" << std::endl;
  return kExitOk;
}

}  // namespace

fs::path DefaultConfigPath() { return IOTRIM_DEFAULT_CONFIG; }

std::string BuildReport(const std::vector<orchestrator::DeviceLedger>& ledgers,
                        const std::string& kind, const std::string& epoch, bool as_json,
                        const analysis::OwnershipTable* ownership) {
  const auto format = as_json ? analysis::Format::kJson : analysis::Format::kText;
  if (kind == "diff") {
    std::vector<std::string> epochs;
    for (const auto& l : ledgers) {
      if (std::find(epochs.begin(), epochs.end(), l.epoch) == epochs.end()) {
        epochs.push_back(l.epoch);
      }
    }
    if (epochs.size() < 2) throw Error(ErrorCode::kPrecondition, "need two epochs");
    std::vector<analysis::ChangeSet> diffs;
    for (std::size_t i = 0; i + 1 < epochs.size(); ++i) {
      const auto a = OfEpoch(ledgers, epochs[i]);
      const auto b = OfEpoch(ledgers, epochs[i + 1]);
      for (const auto& la : a) {
        for (const auto& lb : b) {
          if (la.device == lb.device) {
            diffs.push_back(analysis::LongitudinalDiff(la.classification, lb.classification));
          }
        }
      }
    }
    return analysis::RenderDiff(diffs, format);
  }
  const auto selected = OfEpoch(ledgers, epoch);
  if (selected.empty()) {
    throw Error(ErrorCode::kNotFound, "no campaigns for epoch '" + epoch + "'");
  }
  std::vector<Classification> classifications;
  std::vector<orchestrator::WindowSummary> windows;
  for (const auto& l : selected) {
    classifications.push_back(l.classification);
    windows.insert(windows.end(), l.windows.begin(), l.windows.end());
  }
  if (kind == "destinations") return analysis::RenderDestinations(selected, format);
  if (kind == "blockable") return analysis::RenderBlockable(selected, format);
  if (kind == "traffic") {
    return analysis::RenderTraffic(analysis::CharacterizeTraffic(classifications, windows),
                                   format);
  }
  if (kind == "generalize") {
    return analysis::RenderGeneralization(analysis::Generalize(classifications, ownership),
                                          format);
  }
  throw Error(ErrorCode::kValidation, "unknown report kind '" + kind + "'");
}

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Desk-scale IoT destination trimming lab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "Lab config file")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for every random choice");
  app.add_option("--scale", o.scale, "Real seconds per virtual second")
      ->check(CLI::PositiveNumber);
  app.add_flag("--json", o.json, "Machine-readable output");
  app.add_option("--out", o.out, "Output directory (default from the lab config)");

  auto add_devices = [&](CLI::App* sub) {
    sub->add_option("--device", o.devices, "Device id (repeatable)");
    sub->add_flag("--all", o.all, "Every device in the lab config");
  };

  auto* sweep = app.add_subcommand("sweep", "DNS-behavior sweep over off durations");
  add_devices(sweep);

  auto* trim = app.add_subcommand("trim", "Run campaigns and write ledgers and tables");
  add_devices(trim);
  trim->add_option("--epochs", o.epochs, "Number of longitudinal epochs")
      ->check(CLI::PositiveNumber);
  trim->add_flag("--sweep-first", o.sweep_first,
                 "Run the DNS sweep first; it may lengthen the off duration");

  auto* report = app.add_subcommand("report", "Render a table from persisted ledgers");
  report->add_option("kind", o.kind, "destinations|blockable|traffic|generalize|diff")
      ->required()
      ->check(CLI::IsMember(kReportKinds));
  report->add_option("--ledger", o.ledger, "Ledger directory (default <out>/ledger)");
  report->add_option("--epoch", o.epoch, "Epoch label (default: first)");

  auto* dns = app.add_subcommand("dns", "Resolver administration");
  dns->require_subcommand(1);
  dns->fallthrough();
  auto* serve = dns->add_subcommand("serve", "Serve the zone over UDP on 127.0.0.1");
  serve->add_option("--dns-port", o.dns_port, "UDP port (0 picks one)");
  serve->add_option("--view", o.views, "ADDRESS=DEVICE source mapping (repeatable)");
  serve->add_option("--duration", o.duration, "Stop after this many seconds (0: on signal)");
  auto* query = dns->add_subcommand("query", "Resolve a name");
  query->add_option("name", o.name, "DNS name")->required();
  query->add_option("--device", o.requester, "Resolve in-process as this device");
  query->add_option("--dns-port", o.dns_port, "Ask a running server instead");
  auto* block = dns->add_subcommand("block", "Sinkhole a name");
  block->add_option("name", o.name, "DNS name")->required();
  block->add_option("--device", o.requester, "Device scope (default: all)");
  auto* drop = dns->add_subcommand("drop", "Drop traffic to an address");
  drop->add_option("address", o.address, "IPv4 address")->required();
  drop->add_option("--device", o.requester, "Device scope (default: all)");
  auto* unblock = dns->add_subcommand("unblock", "Remove a rule");
  unblock->add_option("id", o.rule_id, "Rule id")->required();
  dns->add_subcommand("rules", "List active rules");

  bool query_port_given = false;
  try {
    app.parse(argc, argv);
    query_port_given = query->count("--dns-port") > 0;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*sweep) return CmdSweep(o, out);
    if (*trim) return CmdTrim(o, out, err);
    if (*report) return CmdReport(o, out);
    if (*serve) return CmdDnsServe(o, out, err);
    if (*query) {
      Options q = o;
      if (!query_port_given) q.dns_port = 0;
      return CmdDnsQuery(q, out);
    }
    if (*block) return CmdDnsEdit(o, out, "block");
    if (*drop) return CmdDnsEdit(o, out, "drop");
    if (*unblock) return CmdDnsEdit(o, out, "unblock");
    return CmdDnsRules(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kIo:
      case ErrorCode::kParse:
        return kExitIo;
      case ErrorCode::kDeviceBroken:
        return kExitAbort;
      default:
        return kExitUsage;
    }
  }
}

}  // namespace iotrim::cli
