#ifndef FLOODDA_RNG_HPP
#define FLOODDA_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace floodda {

/// splitmix64 finisher; the basis for all seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a hash, for folding string identities (gauge/subdomain ids) into
/// seed derivation tags.
std::uint64_t fnv1a64(std::string_view s);

/// Derives an independent stream seed from a base seed and a list of tags
/// (cycle index, member index, observation identity, ...). The same
/// (base, tags) always gives the same seed, and the derivation does not
/// depend on anything drawn elsewhere, so streams can be added or removed
/// without disturbing each other.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> tags);

/// Seeded generator. Normal draws go through the inverse CDF of a single
/// 53-bit uniform, one engine step per variate, so sequences are stable
/// across platforms and call patterns.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in the open interval (0,1).
  double uniform01();

  /// Standard normal draw.
  double normal();

  double normal(double mean, double stddev);

  /// Gaussian truncated to [lo, hi] by resampling. Throws ConfigError after
  /// max_attempts rejected draws (unsatisfiable bounds).
  double truncated_normal(double mean, double stddev, double lo, double hi,
                          int max_attempts = 1000);

 private:
  std::mt19937_64 eng_;
};

}  // namespace floodda

#endif  // FLOODDA_RNG_HPP
