#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dfp {

using RouterId = std::int32_t;
using TerminalId = std::int32_t;
using GroupId = std::int32_t;
using JobId = std::int32_t;
using Ns = std::int64_t;  // simulation time, nanoseconds

enum class Vl : std::uint8_t { vl0 = 0, vl1 = 1 };

enum class PathClass : std::uint8_t {
  minimal = 0,
  intermediate_spine = 1,
  intermediate_leaf = 2,
};

enum class RouterRole : std::uint8_t { spine, leaf };

const char* to_string(Vl vl);
const char* to_string(PathClass pc);

// Error taxonomy. The CLI maps these onto exit codes, so the split matters:
// ConfigError -> 2, SimulationError (model invariant broke) -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QueryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64: seed derivation and a small standalone generator. Used instead
// of std engines so sequences are identical across standard libraries.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive an independent stream seed from (base, stream). Feeding the mixed
// pair back through splitmix decorrelates adjacent stream ids.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  std::uint64_t a = splitmix64_next(s);
  std::uint64_t b = splitmix64_next(s);
  return a ^ (b << 1);
}

// xoshiro256** seeded via splitmix64. One scramble round is discarded so
// consecutive raw seeds give decorrelated streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    (void)splitmix64_next(sm);
    for (auto& w : s_) w = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace dfp
