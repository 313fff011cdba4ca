#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace sbmcov {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, stream id).
///
/// Every draw is philox(counter, seed) with the stream id in the upper half
/// of the counter, so two streams with different ids never share a block
/// and the whole state is three integers plus a half-block flag.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }
  bool half_used() const { return half_; }

  /// Repositions the stream; used when restoring a checkpoint.
  void restore(std::uint64_t counter, bool half);

  friend bool operator==(const RngStream& x, const RngStream& y) {
    return x.seed_ == y.seed_ && x.stream_ == y.stream_ && x.counter_ == y.counter_ && x.half_ == y.half_;
  }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool half_ = false;
  std::array<std::uint32_t, 4> block_{};
};

/// Stream id for a named purpose ("calibration", "chain", "replication",
/// "fold", ...) and an index within it.
std::uint64_t stream_id(std::string_view purpose, std::uint64_t index = 0);

}  // namespace sbmcov
