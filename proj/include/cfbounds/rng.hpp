#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace cfb {

// SplitMix64 stream. Output is identical on every platform, unlike the
// standard distributions, so draws are reproduced exactly from a seed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Independent stream derived from a seed and a list of keys,
  // e.g. substream(seed, {sample, period, node}).
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next();

  // Uniform on [0, 1) with 53 bits.
  double uniform();

  // Inverse-CDF draw from an unnormalised probability vector.
  // Zero-probability entries are never returned.
  std::size_t categorical(std::span<const double> probs);

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace cfb
