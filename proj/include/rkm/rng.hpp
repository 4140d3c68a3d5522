#pragma once

#include <cstdint>

namespace rkm {

// SplitMix64 finalizer: an invertible 64-bit mixing function.  Used both as
// the generator output stage and for deriving independent child seeds.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Child seed for (master, stream): mix64(master ^ mix64(stream + gamma)).
// Experiments derive the per-run sampling seed as derive_seed(master_seed,
// run_index) and the noise seed from a reserved stream id.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

// Counter-based pseudo-random generator (SplitMix64).  The state is a plain
// counter advanced by a fixed odd increment; each output is mix64(counter).
// The full draw sequence is therefore a pure function of the seed and is
// bit-identical across platforms.
//
// Gaussian variates use the Box-Muller transform and consume exactly two
// uniform draws per call, in a fixed order, so interleaving uniform() and
// gaussian() calls stays reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  // Independent stream for (seed, stream), e.g. per-run sampling streams
  // derived from one master seed.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() noexcept;

  // Standard normal via Box-Muller: z = sqrt(-2 ln u1) * cos(2 pi u2).
  double gaussian() noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace rkm
