#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "prl/tensor.hpp"

namespace prl {

/// Philox4x32-10 block function: the counter-based core behind RngStream.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The key is the seed, the upper half of the
/// counter is the stream id, the lower half counts blocks. Distinct stream ids
/// therefore never share a counter value, and a (seed, stream id, call
/// sequence) triple always reproduces the same numbers on any platform.
///
/// All distributions are implemented here rather than through <random> so
/// that their output does not depend on the standard library vendor.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform();
  /// Uniform on [lo, hi); throws std::invalid_argument unless lo < hi.
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double normal(double mean = 0.0, double stddev = 1.0);
  double laplace(double scale);
  double gamma(double shape);
  std::vector<double> dirichlet(std::size_t k, double concentration);
  bool bernoulli(double p);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::uint64_t draws_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned buffered_ = 0;
};

/// rows×cols i.i.d. Uniform[lo, hi) draws; advances the stream.
Matrix rng_uniform(RngStream& stream, std::size_t rows, std::size_t cols, double lo, double hi);
Matrix rng_normal(RngStream& stream, std::size_t rows, std::size_t cols, double mean, double stddev);

/// Stream ids reserved by the trainers. Node k trains on node_stream(k); the
/// centralized trainer is node 0 so a one-node federation replays it exactly.
namespace streams {
inline constexpr std::uint64_t kEncoderInit = 1;
inline constexpr std::uint64_t kServer = 2;
inline constexpr std::uint64_t kData = 3;
inline constexpr std::uint64_t kProbe = 4;
inline constexpr std::uint64_t kBaseline = 5;
inline constexpr std::uint64_t kShard = 6;
inline constexpr std::uint64_t kNodeBase = 1000;
inline constexpr std::uint64_t kUploadBase = 1u << 20;

inline constexpr std::uint64_t node(std::uint64_t k) { return kNodeBase + k; }
inline constexpr std::uint64_t upload(std::uint64_t k) { return kUploadBase + k; }
}  // namespace streams

}  // namespace prl
