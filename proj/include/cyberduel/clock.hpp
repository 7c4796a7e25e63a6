#pragma once

#include <atomic>

#include "cyberduel/common.hpp"

namespace cyberduel {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override {
    return std::chrono::duration_cast<Millis>(std::chrono::system_clock::now().time_since_epoch());
  }
};

// Simulation clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = Timestamp{0}) : now_(start.count()) {}
  Timestamp now() const override { return Timestamp{now_.load()}; }
  void set(Timestamp t) { now_ = t.count(); }
  void advance(Millis d) { now_ += d.count(); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace cyberduel
