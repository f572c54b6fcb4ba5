#pragma once

#include <span>
#include <string>
#include <vector>

#include "iotrim/analysis/generalize.h"
#include "iotrim/analysis/longitudinal.h"
#include "iotrim/analysis/traffic.h"
#include "iotrim/orchestrator/campaign.h"
#include "iotrim/orchestrator/ledger.h"

namespace iotrim::analysis {

enum class Format { kText, kJson };

/// Column-aligned plain text; widths count UTF-8 code points.
struct TextTable {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  std::string Render() const;
};

/// Contacted destinations per device with the modes they were tested in.
std::string RenderDestinations(std::span<const orchestrator::DeviceLedger> ledgers,
                               Format format);
/// One row per (device, destination, functionality, mode) cell.
std::string RenderBlockable(std::span<const orchestrator::DeviceLedger> ledgers,
                            Format format);
std::string RenderTraffic(std::span<const TrafficRow> rows, Format format);
std::string RenderGeneralization(const GeneralizationReport& report, Format format);
std::string RenderDiff(std::span<const ChangeSet> diffs, Format format);
std::string RenderSweep(std::span<const orchestrator::SweepReport> reports, Format format);

/// "9 destinations, 4 blockable".
std::string SummaryLine(const DestinationCount& count);

}  // namespace iotrim::analysis
