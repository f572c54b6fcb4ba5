#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "iotrim/analysis/ownership.h"
#include "iotrim/orchestrator/ledger.h"

namespace iotrim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAbort = 2;
inline constexpr int kExitIo = 3;

/// The bundled fixture lab.
std::filesystem::path DefaultConfigPath();

/// Renders one report kind (destinations, blockable, traffic, generalize,
/// diff) from persisted ledgers. Only `epoch` is used unless the kind is
/// diff, which compares consecutive epochs. Throws kPrecondition for diff
/// with fewer than two epochs and kValidation for an unknown kind.
std::string BuildReport(const std::vector<orchestrator::DeviceLedger>& ledgers,
                        const std::string& kind, const std::string& epoch, bool json,
                        const analysis::OwnershipTable* ownership);

/// Entry point of the `iotrim` tool. Returns the process exit code.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iotrim::cli
