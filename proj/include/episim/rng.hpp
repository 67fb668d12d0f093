#pragma once

// Counter-based random streams.
//
// Every replicate of a Monte Carlo campaign draws from its own Philox4x32-10
// stream keyed by the master seed, with the replicate index in the upper half
// of the counter. Results therefore depend only on (master_seed, index) and
// never on how replicates are distributed across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace episim {

class philox4x32 {
public:
  using ctr_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  static ctr_type block(ctr_type ctr, key_type key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// UniformRandomBitGenerator producing 64-bit words from a Philox stream.
/// Copyable; a copy continues the same sequence independently.
class stream {
public:
  using result_type = std::uint64_t;

  stream(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(master_seed),
             static_cast<std::uint32_t>(master_seed >> 32)},
        stream_id_(stream_id) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (used_ == 2) refill();
    const std::size_t i = 2 * used_++;
    return (std::uint64_t{buffer_[i + 1]} << 32) | buffer_[i];
  }

  std::uint64_t stream_id() const { return stream_id_; }

private:
  void refill() {
    const philox4x32::ctr_type ctr{
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32)};
    buffer_ = philox4x32::block(ctr, key_);
    ++counter_;
    used_ = 0;
  }

  philox4x32::key_type key_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  philox4x32::ctr_type buffer_{};
  std::size_t used_ = 2;
};

/// Uniform double on [0, 1) with 53 random bits.
template <class Rng> double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double on (0, 1].
template <class Rng> double uniform_open0(Rng& rng) {
  return 1.0 - uniform01(rng);
}

template <class Rng> double sample_exponential(Rng& rng, double rate) {
  return -std::log(uniform_open0(rng)) / rate;
}

/// Uniform index in [0, bound) by Lemire's multiply-shift with rejection.
template <class Rng> std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  __uint128_t product = static_cast<__uint128_t>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<__uint128_t>(rng()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

} // namespace episim
