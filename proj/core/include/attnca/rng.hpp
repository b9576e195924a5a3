#pragma once

#include <cstdint>
#include <vector>

namespace nca {

/// Deterministic, portable pseudorandom generator. Identical seeds produce
/// identical streams on every platform; std:: distributions are avoided on
/// purpose because their output is implementation-defined.
///
/// Generator: xoshiro256++ (Blackman & Vigna). The four 64-bit state words
/// are filled from successive outputs of SplitMix64 applied to the seed.
/// Output: rotl(s0 + s3, 23) + s0, then the xoshiro256 state transition.
///
/// Derived draws, in terms of u64 = next():
///   uniform()          = (u64 >> 11) * 2^-53                    in [0, 1)
///   normal()           = Box-Muller: r = sqrt(-2 ln(1 - u1)),
///                        returns r*cos(2*pi*u2) now and caches
///                        r*sin(2*pi*u2) for the following call
///   bounded(n)         = unbiased rejection: draw u64, retry while
///                        u64 >= 2^64 - (2^64 mod n), return u64 % n
///   range(lo, hi)      = lo + bounded(hi - lo + 1)
///
/// normal() consumes its cached spare before drawing new uniforms, so the
/// exact stream consumption of every algorithm built on this class is
/// reproducible from this comment alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal
  double normal(double mean, double stddev);
  std::uint64_t bounded(std::uint64_t n);                 // [0, n), n >= 1
  std::int64_t range(std::int64_t lo, std::int64_t hi);   // [lo, hi] inclusive

  /// First k elements of a partial Fisher-Yates shuffle of `pool`, in draw
  /// order: for i = 0..k-1 swap pool[i] with pool[i + bounded(len - i)].
  std::vector<int> sample_without_replacement(std::vector<int> pool, std::size_t k);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 step; also used to derive independent sub-stream seeds as
/// mix_seed(base, tag).
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace nca
