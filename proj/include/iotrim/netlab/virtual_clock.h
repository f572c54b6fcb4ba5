#pragma once

#include <chrono>

namespace iotrim::netlab {

/// Monotonic virtual time in seconds, paced against the wall clock: reaching
/// virtual time t never happens before `scale * t` real seconds have passed
/// since construction. Pacing is deadline based, so short steps do not
/// accumulate sleep overhead.
class VirtualClock {
 public:
  static constexpr double kDefaultScale = 0.001;

  explicit VirtualClock(double scale = kDefaultScale);

  double now() const { return now_; }
  double scale() const { return scale_; }

  /// Throws kValidation if `t` is in the past.
  void AdvanceTo(double t);
  void Advance(double seconds) { AdvanceTo(now_ + seconds); }

 private:
  double now_ = 0;
  double scale_;
  std::chrono::steady_clock::time_point real_origin_;
};

}  // namespace iotrim::netlab
