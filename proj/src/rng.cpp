#include "floodda/rng.hpp"

#include <string>

#include "floodda/anamorphosis.hpp"
#include "floodda/common.hpp"

namespace floodda {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t t : tags) {
    s = splitmix64(s ^ (t + 0x9E3779B97F4A7C15ULL + (s << 6) + (s >> 2)));
  }
  return s;
}

double Rng::uniform01() {
  // 53 random bits mapped to (0,1); the half-step keeps 0 and 1 unreachable.
  const std::uint64_t bits = eng_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return std_normal_quantile(uniform01()); }

double Rng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

double Rng::truncated_normal(double mean, double stddev, double lo, double hi,
                             int max_attempts) {
  if (!(lo <= hi)) {
    throw ConfigError("truncated_normal: lo > hi");
  }
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const double x = normal(mean, stddev);
    if (x >= lo && x <= hi) return x;
  }
  throw ConfigError("truncated_normal: no draw inside [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "] after " +
                    std::to_string(max_attempts) + " attempts");
}

}  // namespace floodda
