#include "iotrim/orchestrator/batch.h"

#include <omp.h>

#include <exception>

#include "iotrim/netlab/lab.h"

namespace iotrim::orchestrator {
namespace {


BatchOutcome RunOne(const DeviceModel& model, const BatchOptions& options,
                    std::size_t index) {
  netlab::Lab lab({model}, options.zone,
                  {options.scale, DeviceSeed(options.seed, index), options.epoch});
  Orchestrator orchestrator(lab, options.config, options.hooks, options.epoch_label);
  BatchOutcome out;
  if (options.sweep_first) {
    out.sweep = orchestrator.DnsBehaviorSweep(model.id, options.config.dns_sweep_schedule);
  }
  out.result = orchestrator.RunCampaign(model.id, out.sweep ? &*out.sweep : nullptr);
  out.flows = lab.capture().Flows(model.id);
  out.dns = lab.capture().DnsEvents(model.id);
  return out;
}

SweepReport SweepOne(const DeviceModel& model, const BatchOptions& options,
                     std::size_t index) {
  netlab::Lab lab({model}, options.zone,
                  {options.scale, DeviceSeed(options.seed, index), options.epoch});
  Orchestrator orchestrator(lab, options.config, options.hooks, options.epoch_label);
  return orchestrator.DnsBehaviorSweep(model.id, options.config.dns_sweep_schedule);
}

// Device campaigns are dominated by paced sleeps, so the team is sized by
// device count rather than by cores.
template <typename T, typename Fn>
std::vector<T> Parallel(const std::vector<DeviceModel>& models, Fn fn) {
  const auto n = static_cast<std::ptrdiff_t>(models.size());
  std::vector<T> out(models.size());
  std::vector<std::exception_ptr> errors(models.size());
  if (n == 0) return out;
#pragma omp parallel for num_threads(static_cast<int>(n)) schedule(static, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = fn(models[idx], idx);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

std::uint64_t DeviceSeed(std::uint64_t seed, std::size_t index) {
  // splitmix64 step over (seed, index).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<BatchOutcome> RunCampaignsSerial(const std::vector<DeviceModel>& models,
                                             const BatchOptions& options) {
  std::vector<BatchOutcome> out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    out.push_back(RunOne(models[i], options, i));
  }
  return out;
}

std::vector<BatchOutcome> RunCampaigns(const std::vector<DeviceModel>& models,
                                       const BatchOptions& options) {
  return Parallel<BatchOutcome>(models, [&](const DeviceModel& m, std::size_t i) {
    return RunOne(m, options, i);
  });
}

std::vector<SweepReport> RunSweepsSerial(const std::vector<DeviceModel>& models,
                                         const BatchOptions& options) {
  std::vector<SweepReport> out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    out.push_back(SweepOne(models[i], options, i));
  }
  return out;
}

std::vector<SweepReport> RunSweeps(const std::vector<DeviceModel>& models,
                                   const BatchOptions& options) {
  return Parallel<SweepReport>(models, [&](const DeviceModel& m, std::size_t i) {
    return SweepOne(m, options, i);
  });
}

}  // namespace iotrim::orchestrator
