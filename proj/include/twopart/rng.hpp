#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace twopart {

/// xoshiro256** generator with jump-ahead streams.
///
/// A stream is identified by (seed, stream_id): the seed is expanded with
/// splitmix64, then the state takes (stream_id >> 32) jumps of 2^192 steps
/// and (stream_id & 0xffffffff) jumps of 2^128 steps, so streams of one
/// master seed never overlap in practice.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform draw on the open interval (0, 1).
  double uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void jump();
  void long_jump();
  void apply_jump(const std::array<std::uint64_t, 4>& polynomial);

  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

}  // namespace twopart
