// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace pathind {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Independent sub-streams of a path. Brownian increments and jump candidates
/// are drawn from separate streams so that one never shifts the other.
enum class Substream : std::uint32_t { brownian = 0, jumps = 1, auxiliary = 2 };

/// Counter-based random stream. The draw sequence is a pure function of
/// (seed, path_index, substream); nothing depends on thread scheduling.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t path_index,
               Substream substream = Substream::brownian);

  std::uint32_t next_u32();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }
  double gaussian();
  double exponential(double rate);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint32_t substream_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

RandomStream derive_stream(std::uint64_t seed, std::uint64_t path_index,
                           Substream substream = Substream::brownian);

}  // namespace pathind
