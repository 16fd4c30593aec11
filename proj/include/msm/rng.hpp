#pragma once

#include <array>
#include <cstdint>

namespace msm {

// Philox4x32-10 counter-based block cipher.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

// splitmix64 finalizer; used to derive child seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Independent stream identified by (seed, stream, substream). Output depends
// only on these and on how many draws were taken from this stream.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t stream, std::uint32_t substream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform01();
  double normal();
  double exponential();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  PhiloxKey key_;
  PhiloxCounter ctr_;
  PhiloxCounter block_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace msm
