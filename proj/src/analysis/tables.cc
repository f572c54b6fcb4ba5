#include "iotrim/analysis/tables.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "core/json_codec.h"

namespace iotrim::analysis {
namespace {

using json_codec::json;

std::size_t DisplayWidth(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string Percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::string Seconds(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string TextTable::Render() const {
  std::vector<std::size_t> widths(headers.size(), 0);
  for (std::size_t i = 0; i < headers.size(); ++i) widths[i] = DisplayWidth(headers[i]);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) {
      widths[i] = std::max(widths[i], DisplayWidth(row[i]));
    }
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string text;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::string cell = i < cells.size() ? cells[i] : "";
      text += cell;
      if (i + 1 < widths.size()) text += std::string(widths[i] - DisplayWidth(cell) + 2, ' ');
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  };
  line(headers);
  std::vector<std::string> rule;
  for (auto w : widths) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& row : rows) line(row);
  return out.str();
}

std::string RenderDestinations(std::span<const orchestrator::DeviceLedger> ledgers,
                               Format format) {
  TextTable table{{"device", "epoch", "destination", "modes"}, {}};
  json out = json::array();
  for (const auto& ledger : ledgers) {
    const auto cells = orchestrator::CellVerdicts(ledger.records);
    for (const auto& entry : ledger.classification.entries) {
      std::set<NetworkMode> modes;
      for (const auto& cell : cells) {
        if (cell.key == entry.key) modes.insert(cell.mode);
      }
      std::string label;
      for (auto m : modes) label += (label.empty() ? "" : ", ") + std::string(ToString(m));
      if (modes.size() == 1) label += " only";
      table.rows.push_back({ledger.device, ledger.epoch, entry.key.ToString(), label});
      json j = json_codec::KeyToJson(entry.key);
      j["device"] = ledger.device;
      j["epoch"] = ledger.epoch;
      json jm = json::array();
      for (auto m : modes) jm.push_back(std::string(ToString(m)));
      j["modes"] = std::move(jm);
      out.push_back(std::move(j));
    }
  }
  return format == Format::kJson ? Dump(out) : table.Render();
}

std::string RenderBlockable(std::span<const orchestrator::DeviceLedger> ledgers,
                            Format format) {
  TextTable table{
      {"device", "epoch", "destination", "functionality", "mode", "blockable", "pass/fail"},
      {}};
  json out = json::array();
  for (const auto& ledger : ledgers) {
    for (const auto& cell : orchestrator::CellVerdicts(ledger.records)) {
      table.rows.push_back({ledger.device, ledger.epoch, cell.key.ToString(),
                            cell.functionality, std::string(ToString(cell.mode)),
                            cell.blockable() ? "✓" : "✗",
                            std::to_string(cell.passes) + "/" + std::to_string(cell.failures)});
      json j = json_codec::KeyToJson(cell.key);
      j["device"] = ledger.device;
      j["epoch"] = ledger.epoch;
      j["functionality"] = cell.functionality;
      j["mode"] = std::string(ToString(cell.mode));
      j["blockable"] = cell.blockable();
      j["passes"] = cell.passes;
      j["failures"] = cell.failures;
      out.push_back(std::move(j));
    }
  }
  return format == Format::kJson ? Dump(out) : table.Render();
}

std::string RenderTraffic(std::span<const TrafficRow> rows, Format format) {
  TextTable table{{"destination", "devices", "protocol", "port", "traffic %"}, {}};
  json out = json::array();
  for (const auto& row : rows) {
    table.rows.push_back({row.key.name(),
                          std::to_string(row.devices), row.protocol,
                          row.port ? std::to_string(*row.port) : "-",
                          Percent(row.share_percent)});
    json j = json_codec::KeyToJson(row.key);
    j["devices"] = row.devices;
    j["protocol"] = row.protocol;
    j["share_percent"] = row.share_percent;
    out.push_back(std::move(j));
  }
  return format == Format::kJson ? Dump(out) : table.Render();
}

std::string RenderGeneralization(const GeneralizationReport& report, Format format) {
  TextTable table{{"grouping", "label", "devices", "members", "consistency"}, {}};
  json out = json::array();
  for (const auto& g : report.groups) {
    std::string devices;
    for (const auto& d : g.devices) devices += (devices.empty() ? "" : ",") + d;
    table.rows.push_back({std::string(ToString(g.grouping)), g.label, devices,
                          std::to_string(g.members), std::string(ToString(g.consistency))});
    out.push_back({{"grouping", std::string(ToString(g.grouping))},
                   {"label", g.label},
                   {"devices", g.devices},
                   {"members", g.members},
                   {"consistency", std::string(ToString(g.consistency))}});
  }
  return format == Format::kJson ? Dump(out) : table.Render();
}

std::string RenderDiff(std::span<const ChangeSet> diffs, Format format) {
  json out = json::array();
  std::ostringstream text;
  for (const auto& diff : diffs) {
    text << diff.device << " " << diff.epoch_a << " -> " << diff.epoch_b << ": "
         << (diff.empty() ? "no changes" : std::to_string(diff.changes.size()) + " change(s)")
         << '\n';
    json changes = json::array();
    for (const auto& change : diff.changes) {
      text << "  " << change.ToString() << '\n';
      json c = json_codec::KeyToJson(change.key);
      c["change"] = std::string(ToString(change.kind));
      c["before"] = change.before ? json(std::string(iotrim::ToString(*change.before))) : json();
      c["after"] = change.after ? json(std::string(iotrim::ToString(*change.after))) : json();
      changes.push_back(std::move(c));
    }
    out.push_back({{"device", diff.device},
                   {"epoch_a", diff.epoch_a},
                   {"epoch_b", diff.epoch_b},
                   {"changes", std::move(changes)}});
  }
  return format == Format::kJson ? Dump(out) : text.str();
}

std::string RenderSweep(std::span<const orchestrator::SweepReport> reports, Format format) {
  TextTable table{{"device", "off (s)", "unique queries"}, {}};
  json out = json::array();
  std::string footer;
  for (const auto& r : reports) {
    json entries = json::array();
    for (const auto& e : r.entries) {
      table.rows.push_back({r.device, Seconds(e.off_duration), std::to_string(e.unique_queries)});
      entries.push_back({{"off_duration", e.off_duration}, {"unique_queries", e.unique_queries}});
    }
    footer += r.device + ": minimum off duration " + Seconds(r.minimum_duration) + " s" +
              (r.duration_dependent ? " (counts depend on duration)" : "") + "\n";
    out.push_back({{"device", r.device},
                   {"entries", std::move(entries)},
                   {"minimum_duration", r.minimum_duration},
                   {"duration_dependent", r.duration_dependent}});
  }
  return format == Format::kJson ? Dump(out) : table.Render() + footer;
}

std::string SummaryLine(const DestinationCount& count) {
  return std::to_string(count.destinations) + " destinations, " +
         std::to_string(count.blockable) + " blockable";
}

}  // namespace iotrim::analysis
