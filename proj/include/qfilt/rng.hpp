#pragma once

// Counter-based Philox4x32-10 generator. A stream is identified by
// (seed, stream id, trajectory index); any stream can be reconstructed
// without touching the others, so ensembles are reproducible regardless of
// how trajectories are scheduled across threads.

#include <array>
#include <cstdint>
#include <limits>

namespace qfilt {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 block with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Well-known stream ids so that distinct uses of one seed never overlap.
enum class StreamId : std::uint32_t {
  wiener = 1,
  poisson = 2,
  thinning = 3,
  localization = 4,
  bell = 5,
  generic = 99,
};

/// UniformRandomBitGenerator over a single (seed, stream, index) stream.
class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint32_t stream, std::uint64_t index);
  PhiloxStream(std::uint64_t seed, StreamId stream, std::uint64_t index)
      : PhiloxStream(seed, static_cast<std::uint32_t>(stream), index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal draw.
  double normal();
  /// Exponential draw with the given rate.
  double exponential(double rate);

 private:
  void refill();

  PhiloxKey key_;
  PhiloxCounter ctr_;
  PhiloxCounter buf_{};
  int pos_ = 4;
};

}  // namespace qfilt
