// SPDX-License-Identifier: Apache-2.0
#include "pathind/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pathind/types.hpp"

namespace pathind {
namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;
constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                    std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMulA, ctr[0], lo0, hi0);
    mulhilo(kMulB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t path_index,
                           Substream substream)
    : seed_(seed),
      path_(path_index),
      substream_(static_cast<std::uint32_t>(substream)) {}

void RandomStream::refill() {
  if (block_ == UINT32_MAX) {
    throw NumericError("random stream exhausted (2^34 draws)");
  }
  // counter = (block, substream, path lo, path hi); key = seed
  buffer_ = philox4x32({block_, substream_, static_cast<std::uint32_t>(path_),
                        static_cast<std::uint32_t>(path_ >> 32)},
                       {static_cast<std::uint32_t>(seed_),
                        static_cast<std::uint32_t>(seed_ >> 32)});
  ++block_;
  used_ = 0;
}

std::uint32_t RandomStream::next_u32() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double RandomStream::uniform() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  const std::uint64_t bits = ((hi << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

double RandomStream::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_gaussian_;
  }
  // Box-Muller; the radius argument lies in (0, 1] so the log is finite.
  const double u1 = uniform_open0();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = r * std::sin(angle);
  has_cached_ = true;
  return r * std::cos(angle);
}

double RandomStream::exponential(double rate) {
  return -std::log(uniform_open0()) / rate;
}

RandomStream derive_stream(std::uint64_t seed, std::uint64_t path_index,
                           Substream substream) {
  return RandomStream(seed, path_index, substream);
}

}  // namespace pathind
