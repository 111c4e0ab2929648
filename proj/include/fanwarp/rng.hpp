#pragma once

#include <cstdint>
#include <string_view>

namespace fanwarp {

// Stateless splitmix64 finalizer (Vigna / Steele et al.). Used for seed
// derivation so that per-item streams are a pure function of their key.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over raw bytes, 64-bit variant.
std::uint64_t fnv1a64(std::string_view bytes);

// xoshiro256** (Blackman & Vigna 2018), state expanded from one 64-bit seed
// with a splitmix64 chain. Small, fast, and identical on every platform we
// build for; std:: engines are not pinned down enough for reproducible
// augmentation streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit();

  // Uniform integer in [0, bound). Plain modulo; the bias is irrelevant for
  // shuffling and the mapping must stay frozen for reproducibility.
  std::uint64_t next_below(std::uint64_t bound);

  // Marsaglia polar method. The second variate of each accepted pair is
  // discarded so a draw consumes a self-contained slice of the stream.
  // This is part of the reproducibility contract; do not change it.
  double next_normal(double mean, double sigma);

 private:
  std::uint64_t s_[4];
};

// Derivation contract: identical (global_seed, item_id, epoch) yield an
// identical stream no matter how many other streams were derived or in which
// order. seed0 = mix64(mix64(global_seed ^ fnv1a64(item_id)) ^ epoch).
Rng derive_rng(std::uint64_t global_seed, std::string_view item_id, std::uint64_t epoch);

}  // namespace fanwarp
