#include "iotrim/netlab/virtual_clock.h"

#include <string>
#include <thread>

#include "iotrim/error.h"

namespace iotrim::netlab {

VirtualClock::VirtualClock(double scale)
    : scale_(scale), real_origin_(std::chrono::steady_clock::now()) {
  if (!(scale > 0)) {
    throw Error(ErrorCode::kValidation, "clock scale must be > 0");
  }
}

void VirtualClock::AdvanceTo(double t) {
  if (t < now_) {
    throw Error(ErrorCode::kValidation,
                "virtual time cannot go backwards (" + std::to_string(t) +
                    " < " + std::to_string(now_) + ")");
  }
  now_ = t;
  const auto deadline =
      real_origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(now_ * scale_));
  if (deadline > std::chrono::steady_clock::now()) {
    std::this_thread::sleep_until(deadline);
  }
}

}  // namespace iotrim::netlab
