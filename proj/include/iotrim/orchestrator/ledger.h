#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotrim/capture/capture.h"
#include "iotrim/core/classification.h"
#include "iotrim/orchestrator/campaign.h"

namespace iotrim::orchestrator {

/// Persisted campaign of one device in one epoch. On disk:
///   <root>/epoch-<label>/<device>/experiments.jsonl  records, status, classification
///   <root>/epoch-<label>/<device>/windows.jsonl      window summaries
///   <root>/epoch-<label>/<device>/flows.jsonl        raw flow log
///   <root>/epoch-<label>/<device>/dns.jsonl          raw DNS log
struct DeviceLedger {
  std::string device;
  std::string epoch;
  std::vector<ExperimentRecord> records;
  std::vector<WindowSummary> windows;
  Classification classification;
  bool aborted = false;
  std::string abort_reason;
  double off_duration = 0;
  std::optional<bool> joint_passed;
};

DeviceLedger ToLedger(const CampaignResult& result);

std::string RecordToLine(const ExperimentRecord& record);
ExperimentRecord RecordFromLine(std::string_view line);
std::string WindowToLine(const WindowSummary& window);
WindowSummary WindowFromLine(std::string_view line);

std::filesystem::path LedgerDir(const std::filesystem::path& root,
                                std::string_view epoch, std::string_view device);

/// Writes the four files, replacing earlier ones. Throws kIo.
void WriteLedger(const std::filesystem::path& root, const DeviceLedger& ledger,
                 std::span<const capture::FlowRecord> flows,
                 std::span<const capture::DnsEvent> dns);

/// Reads experiments.jsonl and windows.jsonl of one device directory. A
/// corrupt line throws ParseError naming the file and line.
DeviceLedger ReadDeviceLedger(const std::filesystem::path& dir);

/// Every device ledger under `root`, ordered by (epoch, device).
std::vector<DeviceLedger> ReadLedgers(const std::filesystem::path& root);

/// Epoch labels present under `root`, sorted.
std::vector<std::string> LedgerEpochs(const std::filesystem::path& root);

}  // namespace iotrim::orchestrator
