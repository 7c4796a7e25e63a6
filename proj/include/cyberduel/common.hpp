#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace cyberduel {

using Millis = std::chrono::milliseconds;

// Milliseconds since an origin. Real daemons use the Unix epoch; simulations
// start their clock at zero.
using Timestamp = Millis;

inline double to_seconds(Millis d) { return static_cast<double>(d.count()) / 1000.0; }
inline double to_minutes(Millis d) { return static_cast<double>(d.count()) / 60000.0; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation refused because its preconditions do not hold. State is left
// untouched whenever this is thrown.
class Rejected : public Error {
 public:
  using Error::Error;
};

// Seeded generator with distribution code that does not depend on the
// standard library implementation, so seeds reproduce across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::string hex_encode(const std::uint8_t* data, std::size_t n);
bool is_lower_hex(const std::string& s, std::size_t expected_len);

}  // namespace cyberduel
