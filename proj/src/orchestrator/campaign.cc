#include "iotrim/orchestrator/campaign.h"

#include <algorithm>
#include <set>

#include "core/json_codec.h"
#include "iotrim/error.h"

namespace iotrim::orchestrator {

using json_codec::json;

std::string_view ToString(ExperimentKind kind) {
  return kind == ExperimentKind::kPower ? "POWER" : "INTERACTION";
}

std::string_view ToString(ExperimentRole role) {
  switch (role) {
    case ExperimentRole::kDetect: return "detect";
    case ExperimentRole::kBlock: return "block";
    case ExperimentRole::kControl: return "control";
    case ExperimentRole::kJoint: return "joint";
  }
  return "?";
}

std::string_view ToString(ExperimentVerdict verdict) {
  return verdict == ExperimentVerdict::kPass ? "PASS" : "FAIL";
}

ExperimentKind ParseExperimentKind(std::string_view text) {
  if (text == "POWER") return ExperimentKind::kPower;
  if (text == "INTERACTION") return ExperimentKind::kInteraction;
  throw Error(ErrorCode::kValidation, "unknown experiment kind '" + std::string(text) + "'");
}

ExperimentRole ParseExperimentRole(std::string_view text) {
  for (auto role : {ExperimentRole::kDetect, ExperimentRole::kBlock,
                    ExperimentRole::kControl, ExperimentRole::kJoint}) {
    if (ToString(role) == text) return role;
  }
  throw Error(ErrorCode::kValidation, "unknown experiment role '" + std::string(text) + "'");
}

ExperimentVerdict ParseExperimentVerdict(std::string_view text) {
  if (text == "PASS") return ExperimentVerdict::kPass;
  if (text == "FAIL") return ExperimentVerdict::kFail;
  throw Error(ErrorCode::kValidation, "unknown experiment verdict '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Config

void CampaignConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kValidation, "campaign config: " + what);
  };
  if (repetitions < 1) fail("repetitions must be >= 1");
  if (consecutive_failure_alert_threshold < 1) fail("alert threshold must be >= 1");
  if (control_every < 1) fail("control_every must be >= 1");
  if (off_duration < 0 || inter_experiment_gap < 0) fail("durations must be >= 0");
  if (capture_duration < 0 || boot_settle < 0) fail("durations must be >= 0");
  if (completion_timeout <= 0) fail("completion_timeout must be > 0");
  if (dns_sweep_schedule.empty()) fail("dns_sweep_schedule is empty");
  for (double d : dns_sweep_schedule) {
    if (d < 0) fail("sweep durations must be >= 0");
  }
}

CampaignConfig ParseCampaignConfig(std::string_view text) {
  constexpr std::string_view kContext = "campaign config";
  const json j = json_codec::ParseText(text, kContext);
  json_codec::RequireOnlyKeys(
      j,
      {"repetitions", "off_duration", "inter_experiment_gap",
       "consecutive_failure_alert_threshold", "dns_sweep_schedule", "control_every",
       "completion_timeout", "capture_duration", "boot_settle", "verify_joint"},
      kContext);
  CampaignConfig c;
  auto integer = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) {
      throw Error(ErrorCode::kValidation,
                  std::string(kContext) + ": '" + key + "' must be an integer");
    }
    out = j[key].get<int>();
  };
  auto number = [&](const char* key, double& out) {
    if (j.contains(key)) out = json_codec::RequiredNumber(j, key, kContext);
  };
  integer("repetitions", c.repetitions);
  integer("consecutive_failure_alert_threshold", c.consecutive_failure_alert_threshold);
  integer("control_every", c.control_every);
  number("off_duration", c.off_duration);
  number("inter_experiment_gap", c.inter_experiment_gap);
  number("completion_timeout", c.completion_timeout);
  number("capture_duration", c.capture_duration);
  number("boot_settle", c.boot_settle);
  if (j.contains("verify_joint")) {
    if (!j["verify_joint"].is_boolean()) {
      throw Error(ErrorCode::kValidation,
                  std::string(kContext) + ": 'verify_joint' must be a boolean");
    }
    c.verify_joint = j["verify_joint"].get<bool>();
  }
  if (j.contains("dns_sweep_schedule")) {
    c.dns_sweep_schedule.clear();
    for (const json& d : j["dns_sweep_schedule"]) {
      if (!d.is_number()) {
        throw Error(ErrorCode::kValidation,
                    std::string(kContext) + ": sweep durations must be numbers");
      }
      c.dns_sweep_schedule.push_back(d.get<double>());
    }
  }
  c.Validate();
  return c;
}

CampaignConfig LoadCampaignConfig(const std::filesystem::path& path) {
  try {
    return ParseCampaignConfig(json_codec::ReadFile(path, "campaign config"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string SerializeCampaignConfig(const CampaignConfig& c) {
  json j{{"repetitions", c.repetitions},
         {"off_duration", c.off_duration},
         {"inter_experiment_gap", c.inter_experiment_gap},
         {"consecutive_failure_alert_threshold", c.consecutive_failure_alert_threshold},
         {"dns_sweep_schedule", c.dns_sweep_schedule},
         {"control_every", c.control_every},
         {"completion_timeout", c.completion_timeout},
         {"capture_duration", c.capture_duration},
         {"boot_settle", c.boot_settle},
         {"verify_joint", c.verify_joint}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Folding

std::vector<CellVerdict> CellVerdicts(const std::vector<ExperimentRecord>& records) {
  std::vector<CellVerdict> cells;
  for (const auto& r : records) {
    if (r.role != ExperimentRole::kBlock || !r.validated || !r.blocked) continue;
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellVerdict& c) {
      return c.key == *r.blocked && c.functionality == *r.functionality &&
             c.mode == *r.mode;
    });
    if (it == cells.end()) {
      cells.push_back(CellVerdict{*r.blocked, *r.functionality, *r.mode, 0, 0});
      it = cells.end() - 1;
    }
    (*r.verdict == ExperimentVerdict::kPass ? it->passes : it->failures)++;
  }
  return cells;
}

Classification Classify(const std::string& device, const std::string& epoch,
                        const std::vector<ExperimentRecord>& records) {
  struct Tally {
    std::size_t passes = 0;
    std::size_t failures = 0;
    std::vector<std::string> evidence;
  };
  std::vector<DestinationKey> order;
  std::map<DestinationKey, Tally> tallies;
  for (const auto& r : records) {
    if (r.role != ExperimentRole::kBlock || !r.validated || !r.blocked) continue;
    auto [it, inserted] = tallies.try_emplace(*r.blocked);
    if (inserted) order.push_back(*r.blocked);
    (*r.verdict == ExperimentVerdict::kPass ? it->second.passes : it->second.failures)++;
    it->second.evidence.push_back(std::to_string(r.id));
  }
  Classification out{device, epoch, {}};
  for (const auto& key : order) {
    Tally& t = tallies[key];
    out.entries.push_back(
        {key, FoldVerdict(t.passes, t.failures), std::move(t.evidence)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestrator

namespace {

// Clears installed rules on every exit path.
class RuleGuard {
 public:
  RuleGuard(dnsctl::Resolver& resolver, std::vector<std::uint64_t> ids)
      : resolver_(resolver), ids_(std::move(ids)) {}
  ~RuleGuard() {
    for (auto id : ids_) resolver_.ClearRule(id);
  }
  RuleGuard(const RuleGuard&) = delete;
  RuleGuard& operator=(const RuleGuard&) = delete;

 private:
  dnsctl::Resolver& resolver_;
  std::vector<std::uint64_t> ids_;
};

}  // namespace

Orchestrator::Orchestrator(netlab::Lab& lab, CampaignConfig config,
                           CampaignHooks hooks, std::string epoch_label)
    : lab_(lab),
      config_(std::move(config)),
      hooks_(std::move(hooks)),
      epoch_(std::move(epoch_label)) {
  config_.Validate();
  off_duration_ = std::max(config_.off_duration, config_.inter_experiment_gap);
}

void Orchestrator::EnsureOn(const std::string& device) {
  if (lab_.power(device) == netlab::Power::kOn) return;
  lab_.PowerOn(device);
  lab_.Advance(config_.capture_duration);
}

std::vector<std::string> Orchestrator::Crop(const std::string& device,
                                            const std::string& functionality) const {
  return {lab_.Model(device).Functionality(functionality).state_effect.field};
}

ExperimentRecord Orchestrator::Begin(const std::string& device, ExperimentKind kind,
                                     ExperimentRole role) {
  ExperimentRecord r;
  r.id = next_record_++;
  r.device = device;
  r.kind = kind;
  r.role = role;
  return r;
}

void Orchestrator::Finish(ExperimentRecord record, capture::CaptureWindow window) {
  record.window = window.id;
  windows_.push_back(WindowSummary{window.id, record.device, record.id,
                                   window.opened_at, window.closed_at,
                                   capture::UniqueQueryNames(window),
                                   capture::ExtractDestinations(window)});
  captured_.push_back(std::move(window));
  records_.push_back(record);
  if (hooks_.on_record) hooks_.on_record(record);
}

SweepReport Orchestrator::DnsBehaviorSweep(std::string_view device_view,
                                           const std::vector<double>& schedule) {
  const std::string device(device_view);
  if (schedule.empty()) {
    throw Error(ErrorCode::kValidation, "sweep schedule is empty");
  }
  EnsureOn(device);
  SweepReport report{device, {}, 0, false};
  for (double duration : schedule) {
    lab_.PowerOff(device, duration);
    lab_.AdvanceBefore(duration);
    const auto window = lab_.OpenWindow(device);
    lab_.Advance(0);
    lab_.Advance(config_.capture_duration);
    const auto captured = lab_.CloseWindow(window);
    report.entries.push_back({duration, capture::UniqueQueryNames(captured).size()});
  }
  auto sorted = report.entries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepEntry& a, const SweepEntry& b) {
                     return a.off_duration < b.off_duration;
                   });
  std::size_t max_count = 0;
  for (const auto& e : sorted) max_count = std::max(max_count, e.unique_queries);
  std::size_t i = sorted.size();
  while (i > 0 && sorted[i - 1].unique_queries == max_count) --i;
  report.minimum_duration = sorted[i].off_duration;
  report.duration_dependent = std::any_of(
      sorted.begin(), sorted.end(),
      [&](const SweepEntry& e) { return e.unique_queries != max_count; });
  return report;
}

std::vector<DestinationKey> Orchestrator::DetectDestinations(
    std::string_view device_view, std::string_view functionality_view,
    NetworkMode mode) {
  const std::string device(device_view);
  const std::string functionality(functionality_view);
  const auto& spec = lab_.Model(device).Functionality(functionality);
  if (!spec.Supports(mode)) {
    throw Error(ErrorCode::kNotFound, "functionality '" + functionality +
                                          "' is not declared for " +
                                          std::string(ToString(mode)));
  }
  for (const auto& rule : lab_.resolver().Rules()) {
    if (rule.device == device || rule.device == dnsctl::kAllDevices) {
      throw Error(ErrorCode::kPrecondition,
                  "block rules are active for '" + device + "'; detection needs a clean lab");
    }
  }
  EnsureOn(device);

  // Power window.
  ExperimentRecord power = Begin(device, ExperimentKind::kPower, ExperimentRole::kDetect);
  power.mode = mode;
  if (hooks_.before_experiment) hooks_.before_experiment(power, lab_);
  lab_.PowerOff(device, off_duration_);
  lab_.AdvanceBefore(off_duration_);
  power.at = lab_.now();
  auto window = lab_.OpenWindow(device);
  lab_.Advance(0);
  lab_.Advance(config_.capture_duration);
  auto power_window = lab_.CloseWindow(window);
  const auto keys = capture::ExtractDestinations(power_window);
  Finish(power, std::move(power_window));

  // Interaction window; the clean run doubles as validator calibration.
  ExperimentRecord interaction =
      Begin(device, ExperimentKind::kInteraction, ExperimentRole::kDetect);
  interaction.functionality = functionality;
  interaction.mode = mode;
  if (hooks_.before_experiment) hooks_.before_experiment(interaction, lab_);
  lab_.PowerOff(device, off_duration_);
  lab_.AdvanceBefore(off_duration_);
  lab_.Advance(0);
  lab_.Advance(config_.boot_settle);
  const auto crop = Crop(device, functionality);
  const auto before = lab_.Snapshot(device, crop);
  interaction.at = lab_.now();
  window = lab_.OpenWindow(device);
  const auto trigger = lab_.TriggerFunctionality(device, functionality, mode);
  const auto completion = lab_.WaitForCompletion(trigger, config_.completion_timeout);
  auto interaction_window = lab_.CloseWindow(window);
  const auto after = lab_.Snapshot(device, crop);
  const bool ok = completion && completion->success && after.fields != before.fields;
  interaction.validated = ok;
  if (ok) interaction.verdict = ExperimentVerdict::kPass;
  const auto more = capture::ExtractDestinations(interaction_window);
  Finish(interaction, std::move(interaction_window));
  if (!ok) {
    throw Error(ErrorCode::kDeviceBroken,
                "device '" + device + "': " + functionality + " (" +
                    std::string(ToString(mode)) + ") fails on a clean run");
  }
  baselines_[{device, functionality, mode}] = after;

  std::vector<DestinationKey> out;
  for (const auto* list : {&keys, &more}) {
    for (const auto& stats : *list) {
      if (std::find(out.begin(), out.end(), stats.key) == out.end()) {
        out.push_back(stats.key);
      }
    }
  }
  return out;
}

const netlab::StateSnapshot* Orchestrator::Baseline(std::string_view device,
                                                    std::string_view functionality,
                                                    NetworkMode mode) const {
  auto it = baselines_.find({std::string(device), std::string(functionality), mode});
  return it == baselines_.end() ? nullptr : &it->second;
}

ExperimentVerdict Orchestrator::Validate(std::string_view device,
                                         std::string_view functionality,
                                         const netlab::StateSnapshot& baseline) {
  lab_.Model(device).Functionality(functionality);
  std::vector<std::string> fields;
  for (const auto& [field, value] : baseline.fields) fields.push_back(field);
  const auto current = lab_.Snapshot(device, fields);
  return current.fields == baseline.fields ? ExperimentVerdict::kPass
                                           : ExperimentVerdict::kFail;
}

ExperimentVerdict Orchestrator::Validate(std::string_view device,
                                         std::string_view functionality,
                                         NetworkMode mode) {
  const auto* baseline = Baseline(device, functionality, mode);
  if (!baseline) {
    throw Error(ErrorCode::kPrecondition,
                "no baseline for " + std::string(device) + "/" +
                    std::string(functionality) + " (" + std::string(ToString(mode)) +
                    "); calibrate with a clean run first");
  }
  return Validate(device, functionality, *baseline);
}

std::vector<std::uint64_t> Orchestrator::InstallRules(const std::string& device,
                                                      const Planned& plan) {
  std::vector<DestinationKey> keys = plan.joint;
  if (plan.blocked) keys.push_back(*plan.blocked);
  std::vector<std::uint64_t> ids;
  auto& resolver = lab_.resolver();
  for (const auto& key : keys) {
    ids.push_back(key.is_ip_literal() ? resolver.SetIpDrop(device, key.address())
                                      : resolver.SetBlock(device, key.name()));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

ExperimentRecord Orchestrator::RunInteraction(const std::string& device,
                                              const std::string& functionality,
                                              NetworkMode mode, const Planned& plan,
                                              int attempt) {
  if (!Baseline(device, functionality, mode)) {
    throw Error(ErrorCode::kPrecondition,
                "no baseline for " + device + "/" + functionality + " (" +
                    std::string(ToString(mode)) + "); calibrate with a clean run first");
  }
  ExperimentRecord record = Begin(device, ExperimentKind::kInteraction, plan.role);
  record.functionality = functionality;
  record.mode = mode;
  record.blocked = plan.blocked;
  record.joint_blocked = plan.joint;
  record.attempt = attempt;
  if (hooks_.before_experiment) hooks_.before_experiment(record, lab_);

  lab_.PowerOff(device, off_duration_);
  capture::CaptureWindow captured;
  {
    RuleGuard rules(lab_.resolver(), InstallRules(device, plan));
    lab_.AdvanceBefore(off_duration_);
    record.at = lab_.now();
    const auto window = lab_.OpenWindow(device);
    try {
      lab_.Advance(0);
      lab_.Advance(config_.boot_settle);
      const auto trigger = lab_.TriggerFunctionality(device, functionality, mode);
      const auto completion = lab_.WaitForCompletion(trigger, config_.completion_timeout);
      if (!completion) {
        record.validated = true;
        record.verdict = ExperimentVerdict::kFail;
      } else {
        try {
          record.verdict = Validate(device, functionality, mode);
          record.validated = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kUnavailable) throw;
        }
      }
    } catch (...) {
      lab_.CloseWindow(window);
      throw;
    }
    captured = lab_.CloseWindow(window);
  }
  Finish(record, std::move(captured));
  return record;
}

ExperimentRecord Orchestrator::BlockAndValidate(std::string_view device,
                                                const DestinationKey& key,
                                                std::string_view functionality,
                                                NetworkMode mode) {
  const Planned plan{ExperimentRole::kBlock, key, {}};
  auto record = RunInteraction(std::string(device), std::string(functionality),
                               mode, plan, 1);
  if (!record.validated) {
    record = RunInteraction(std::string(device), std::string(functionality), mode,
                            plan, 2);
  }
  return record;
}

CampaignResult Orchestrator::RunCampaign(std::string_view device_view,
                                         const SweepReport* sweep) {
  const std::string device(device_view);
  const DeviceModel& model = lab_.Model(device);
  off_duration_ = std::max(config_.off_duration, config_.inter_experiment_gap);
  if (sweep && sweep->minimum_duration > off_duration_) {
    off_duration_ = sweep->minimum_duration;
  }
  const std::size_t first_record = records_.size();
  const std::size_t first_window = windows_.size();

  CampaignResult result;
  result.device = device;
  result.epoch = epoch_;
  result.off_duration = off_duration_;

  struct Cell {
    std::string functionality;
    NetworkMode mode;
    std::vector<DestinationKey> keys;
  };
  std::vector<Cell> cells;
  try {
    EnsureOn(device);
    for (const auto& f : model.functionalities) {
      for (NetworkMode mode : f.modes) {
        cells.push_back({f.name, mode, DetectDestinations(device, f.name, mode)});
      }
    }

    int since_control = 0;
    int consecutive = 0;
    for (const Cell& cell : cells) {
      for (int rep = 0; rep < config_.repetitions; ++rep) {
        for (const auto& key : cell.keys) {
          BlockAndValidate(device, key, cell.functionality, cell.mode);
          if (++since_control < config_.control_every) continue;
          since_control = 0;
          const Planned control{ExperimentRole::kControl, std::nullopt, {}};
          auto record = RunInteraction(device, cell.functionality, cell.mode, control, 1);
          if (!record.validated) {
            record = RunInteraction(device, cell.functionality, cell.mode, control, 2);
          }
          if (!record.validated) continue;
          if (*record.verdict == ExperimentVerdict::kPass) {
            consecutive = 0;
            continue;
          }
          if (++consecutive < config_.consecutive_failure_alert_threshold) continue;
          Alert alert{device, consecutive, lab_.now(),
                      "control runs failed " + std::to_string(consecutive) +
                          " times in a row for " + cell.functionality + " (" +
                          std::string(ToString(cell.mode)) + ")"};
          result.alerts.push_back(alert);
          if (hooks_.on_alert) hooks_.on_alert(alert);
          throw Error(ErrorCode::kDeviceBroken, "device '" + device + "': " + alert.message);
        }
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDeviceBroken && e.code() != ErrorCode::kUnavailable) {
      throw;
    }
    result.aborted = true;
    result.abort_reason = e.what();
  }

  auto slice = [](const auto& all, std::size_t from) {
    return std::vector(all.begin() + static_cast<std::ptrdiff_t>(from), all.end());
  };
  result.classification = Classify(device, epoch_, slice(records_, first_record));

  if (config_.verify_joint && !result.aborted) {
    std::vector<DestinationKey> joint;
    for (const auto& entry : result.classification.entries) {
      if (entry.verdict == Verdict::kBlockableAll) joint.push_back(entry.key);
    }
    if (!joint.empty()) {
      bool passed = true;
      for (const Cell& cell : cells) {
        const Planned plan{ExperimentRole::kJoint, std::nullopt, joint};
        auto record = RunInteraction(device, cell.functionality, cell.mode, plan, 1);
        if (!record.validated) {
          record = RunInteraction(device, cell.functionality, cell.mode, plan, 2);
        }
        passed = passed && record.validated &&
                 *record.verdict == ExperimentVerdict::kPass;
      }
      result.joint_passed = passed;
    }
  }

  result.records = slice(records_, first_record);
  result.windows = slice(windows_, first_window);
  result.captured = slice(captured_, first_window);
  return result;
}

}  // namespace iotrim::orchestrator
