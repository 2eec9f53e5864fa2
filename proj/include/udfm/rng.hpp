#pragma once

#include <cstdint>

namespace udfm {

/// Counter-based random stream (SplitMix64 finalizer over a keyed counter).
///
/// Every draw is a pure function of (key, counter), so a stream can be
/// split into independent child streams and replayed from any position.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Raw 64-bit output; advances the counter by one.
  std::uint64_t next_u64();

  /// Uniform deviate in [0, 1) with 53 bits of resolution.
  double uniform();

  /// Independent child stream identified by `stream_id`.
  CounterRng split(std::uint64_t stream_id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace udfm
