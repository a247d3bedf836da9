#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "clipsgd/core.hpp"

namespace clipsgd {

/// Counter-based random stream (Philox4x32-10).
///
/// A draw is a pure function of (seed, stream_id, counter): the seed is the
/// 64-bit Philox key and (counter, stream_id) form the 128-bit Philox
/// counter. Every block consumed advances `counter` by one. Streams with
/// different stream_ids never share a block.
///
/// Counter cost of each draw:
///   next_block / uniform / uniform_index    1 block
///   standard_normal(out)                    ceil(out.size() / 2) blocks
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream_id,
               std::uint64_t counter = 0)
      : seed_(seed), stream_id_(stream_id), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Four 32-bit words for the current counter, then counter += 1.
  std::array<std::uint32_t, 4> next_block();

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Fills `out` with iid N(0,1) draws (Box-Muller, two per block).
  void standard_normal(std::span<double> out);

  /// Independent child stream: same seed, derived stream id, counter 0.
  RandomStream substream(std::uint64_t child) const;

  bool operator==(const RandomStream&) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
};

/// Philox4x32-10 block function, exposed for tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer used for stream-id derivation.
std::uint64_t mix64(std::uint64_t x);

/// d iid standard normal entries; advances the stream by ceil(d/2) blocks.
Vector draw_standard_normal(RandomStream& stream, std::size_t d);

}  // namespace clipsgd
