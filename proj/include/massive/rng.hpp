#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. SC'11).
//
// A stream is addressed by (key, stream id); the 128-bit counter is the
// stream id in the high half and a block index in the low half, so any
// number of independent streams can be opened from one master seed without
// coordination between threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace massive {

namespace detail {

inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxBlock philox_round(const PhiloxBlock& c, const PhiloxKey& k) {
  const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  for (int r = 0; r < 10; ++r) {
    ctr = philox_round(ctr, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

// splitmix64 finalizer; used to derive stream ids from structured tags.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic random stream. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_id_(stream_id) {}

  /// Stream for an indexed sub-task, e.g. path `index` of the experiment
  /// tagged `tag`. Distinct (tag, index) pairs give distinct streams.
  static RngStream for_task(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return RngStream(seed, detail::mix64(detail::mix64(tag) ^ index));
  }

  /// Child stream that does not overlap this one.
  RngStream split(std::uint64_t child) const {
    RngStream s = *this;
    s.stream_id_ = detail::mix64(stream_id_ ^ detail::mix64(child + 1));
    s.block_ = 0;
    s.lane_ = 4;
    s.has_spare_ = false;
    return s;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(uniform()); }

  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint32_t next_u32() {
    if (lane_ == 4) {
      const detail::PhiloxBlock ctr{static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32),
                                    static_cast<std::uint32_t>(stream_id_),
                                    static_cast<std::uint32_t>(stream_id_ >> 32)};
      buffer_ = detail::philox4x32_10(ctr, key_);
      ++block_;
      lane_ = 0;
    }
    return buffer_[lane_++];
  }

  detail::PhiloxKey key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  detail::PhiloxBlock buffer_{};
  int lane_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stream tags, one per experiment family.
namespace stream_tag {
inline constexpr std::uint64_t masses = 1;
inline constexpr std::uint64_t positions = 2;
inline constexpr std::uint64_t paths = 3;
inline constexpr std::uint64_t reweighting = 4;
inline constexpr std::uint64_t oracle = 5;
}  // namespace stream_tag

}  // namespace massive
