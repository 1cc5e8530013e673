#pragma once

#include <array>
#include <cstdint>

namespace rsvi {

/// Philox4x32-10 block function: encrypts a 128-bit counter under a 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream.
///
/// Draws are the Philox4x32-10 encryption of a counter (stream_id in the high
/// 64 bits, block index in the low 64 bits) under the key `seed`. Identical
/// (seed, stream_id) pairs therefore reproduce identical sequences on every
/// platform, and streams with distinct ids never share a counter.
///
/// Child streams for parallel fan-out come from derive(), which mixes the
/// parent id with the child index through a SplitMix64 finalizer. A stream is
/// single-owner; copy it only to replay a sequence.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniformly distributed 64-bit word.
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  /// Uniform on the open interval (0, 1); zero is redrawn.
  double uniform_open() noexcept;

  /// Standard normal via the Marsaglia polar method. Both variates of an
  /// accepted pair are used; the second is held for the next call.
  double std_normal() noexcept;

  /// Independent child stream keyed by `child`. Does not advance this stream.
  RandomStream derive(std::uint64_t child) const noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 32-bit words still unread in buffer_
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

inline double draw_uniform(RandomStream& stream) noexcept { return stream.uniform(); }
inline double draw_std_normal(RandomStream& stream) noexcept { return stream.std_normal(); }

}  // namespace rsvi
