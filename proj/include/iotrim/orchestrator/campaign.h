#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "iotrim/capture/capture.h"
#include "iotrim/core/classification.h"
#include "iotrim/core/destination.h"
#include "iotrim/core/device_model.h"
#include "iotrim/netlab/lab.h"

namespace iotrim::orchestrator {

enum class ExperimentKind : std::uint8_t { kPower, kInteraction };
enum class ExperimentRole : std::uint8_t { kDetect, kBlock, kControl, kJoint };
enum class ExperimentVerdict : std::uint8_t { kPass, kFail };

std::string_view ToString(ExperimentKind kind);
std::string_view ToString(ExperimentRole role);
std::string_view ToString(ExperimentVerdict verdict);
ExperimentKind ParseExperimentKind(std::string_view text);
ExperimentRole ParseExperimentRole(std::string_view text);
ExperimentVerdict ParseExperimentVerdict(std::string_view text);

struct ExperimentRecord {
  std::uint64_t id = 0;
  std::string device;
  ExperimentKind kind = ExperimentKind::kInteraction;
  ExperimentRole role = ExperimentRole::kBlock;
  std::optional<std::string> functionality;
  std::optional<NetworkMode> mode;
  /// Destination blocked for the experiment (DNS override, or IP drop for
  /// literals). Joint runs block every key in `joint_blocked` instead.
  std::optional<DestinationKey> blocked;
  std::vector<DestinationKey> joint_blocked;
  std::uint64_t window = 0;
  bool validated = false;
  std::optional<ExperimentVerdict> verdict;
  int attempt = 1;
  double at = 0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Per-window digest persisted in the ledger.
struct WindowSummary {
  std::uint64_t id = 0;
  std::string device;
  std::uint64_t record = 0;
  double opened_at = 0;
  double closed_at = 0;
  std::vector<std::string> queries;
  std::vector<capture::DestinationStats> destinations;

  friend bool operator==(const WindowSummary&, const WindowSummary&) = default;
};

struct CampaignConfig {
  int repetitions = 30;
  double off_duration = 120;
  double inter_experiment_gap = 120;
  int consecutive_failure_alert_threshold = 3;
  std::vector<double> dns_sweep_schedule = {2,    240,  480,  960,
                                            1920, 3840, 7680, 11280};
  /// A control (unblocked) run follows every N block experiments.
  int control_every = 5;
  /// Completion wait; expiry counts as FAIL.
  double completion_timeout = 60;
  /// Length of power windows and sweep captures.
  double capture_duration = 120;
  /// Time between power-on and the trigger.
  double boot_settle = 1;
  /// Post-pass: block every BLOCKABLE_ALL key at once and re-validate.
  bool verify_joint = false;

  /// Throws kValidation.
  void Validate() const;
};

CampaignConfig ParseCampaignConfig(std::string_view text);
CampaignConfig LoadCampaignConfig(const std::filesystem::path& path);
std::string SerializeCampaignConfig(const CampaignConfig& config);

struct Alert {
  std::string device;
  int consecutive_failures = 0;
  double at = 0;
  std::string message;
};

struct SweepEntry {
  double off_duration = 0;
  std::size_t unique_queries = 0;
};

struct SweepReport {
  std::string device;
  std::vector<SweepEntry> entries;
  /// Smallest duration from which every longer duration yields the maximal
  /// count.
  double minimum_duration = 0;
  bool duration_dependent = false;
};

/// One row per (key, functionality, mode) tested.
struct CellVerdict {
  DestinationKey key;
  std::string functionality;
  NetworkMode mode = NetworkMode::kLan;
  std::size_t passes = 0;
  std::size_t failures = 0;

  bool blockable() const { return failures == 0 && passes > 0; }
};

/// Cells in first-tested order; unvalidated and non-block records are skipped.
std::vector<CellVerdict> CellVerdicts(const std::vector<ExperimentRecord>& records);

/// Per-key fold over every validated block experiment.
Classification Classify(const std::string& device, const std::string& epoch,
                        const std::vector<ExperimentRecord>& records);

struct CampaignResult {
  std::string device;
  std::string epoch;
  Classification classification;
  std::vector<ExperimentRecord> records;
  std::vector<WindowSummary> windows;
  std::vector<capture::CaptureWindow> captured;
  std::vector<Alert> alerts;
  /// Set by the joint post-pass when enabled.
  std::optional<bool> joint_passed;
  bool aborted = false;
  std::string abort_reason;
  double off_duration = 0;
};

struct CampaignHooks {
  /// Called before each experiment with the planned record.
  std::function<void(const ExperimentRecord&, netlab::Lab&)> before_experiment;
  std::function<void(const ExperimentRecord&)> on_record;
  std::function<void(const Alert&)> on_alert;
};

/// Drives one lab through sweeps, detection, and block-and-validate
/// campaigns. Not thread safe; one orchestrator per lab.
class Orchestrator {
 public:
  Orchestrator(netlab::Lab& lab, CampaignConfig config, CampaignHooks hooks = {},
               std::string epoch_label = "0");

  const CampaignConfig& config() const { return config_; }

  SweepReport DnsBehaviorSweep(std::string_view device,
                               const std::vector<double>& schedule);

  /// Union of the power and interaction window keys in first-seen order.
  /// Calibrates the validator baseline for (functionality, mode) on the way.
  /// Throws kDeviceBroken when the clean run does not complete.
  std::vector<DestinationKey> DetectDestinations(std::string_view device,
                                                 std::string_view functionality,
                                                 NetworkMode mode);

  /// One isolated experiment with `key` blocked. Retries once when the
  /// validator is unreachable.
  ExperimentRecord BlockAndValidate(std::string_view device,
                                    const DestinationKey& key,
                                    std::string_view functionality,
                                    NetworkMode mode);

  /// Compares the crop of the current state with `baseline`. Throws
  /// kUnavailable when the probe fails.
  ExperimentVerdict Validate(std::string_view device, std::string_view functionality,
                             const netlab::StateSnapshot& baseline);
  /// Same, with the baseline recorded by DetectDestinations. Throws
  /// kPrecondition when uncalibrated.
  ExperimentVerdict Validate(std::string_view device, std::string_view functionality,
                             NetworkMode mode);
  const netlab::StateSnapshot* Baseline(std::string_view device,
                                        std::string_view functionality,
                                        NetworkMode mode) const;

  /// Full campaign. The sweep, when given, can lengthen the off duration.
  CampaignResult RunCampaign(std::string_view device,
                             const SweepReport* sweep = nullptr);

  const std::vector<ExperimentRecord>& records() const { return records_; }
  const std::vector<WindowSummary>& windows() const { return windows_; }

 private:
  struct Planned {
    ExperimentRole role;
    std::optional<DestinationKey> blocked;
    std::vector<DestinationKey> joint;
  };

  ExperimentRecord RunInteraction(const std::string& device,
                                  const std::string& functionality,
                                  NetworkMode mode, const Planned& plan,
                                  int attempt);
  ExperimentRecord Begin(const std::string& device, ExperimentKind kind,
                         ExperimentRole role);
  void Finish(ExperimentRecord record, capture::CaptureWindow window);
  void EnsureOn(const std::string& device);
  std::vector<std::uint64_t> InstallRules(const std::string& device,
                                          const Planned& plan);
  void ClearRules(const std::vector<std::uint64_t>& ids);
  std::vector<std::string> Crop(const std::string& device,
                                const std::string& functionality) const;

  netlab::Lab& lab_;
  CampaignConfig config_;
  CampaignHooks hooks_;
  std::string epoch_;
  double off_duration_;
  std::uint64_t next_record_ = 1;
  std::map<std::tuple<std::string, std::string, NetworkMode>, netlab::StateSnapshot>
      baselines_;
  std::vector<ExperimentRecord> records_;
  std::vector<WindowSummary> windows_;
  std::vector<capture::CaptureWindow> captured_;
};

}  // namespace iotrim::orchestrator
