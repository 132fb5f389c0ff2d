#ifndef FLOODDA_COMMON_HPP
#define FLOODDA_COMMON_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace floodda {

/// Violated precondition or dimension mismatch at a public interface.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or unsatisfiable configuration (files, priors, bounds).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: solver blow-up, singular analysis system.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Empirical sample has no spread; no transform can be fitted.
class DegenerateDistributionError : public std::runtime_error {
 public:
  explicit DegenerateDistributionError(const std::string& msg)
      : std::runtime_error(msg) {}
};

/// Sum with a canonical (value-sorted) accumulation order, so the result does
/// not depend on how the inputs were ordered. Used for ensemble statistics,
/// where member permutations must not change the analysis bits.
inline double stable_sum(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

/// Mean over stable_sum. An all-equal sample returns the common value
/// exactly, so anomalies of a spread-free ensemble are exactly zero.
inline double stable_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double first = values.front();
  bool all_equal = true;
  for (double x : values)
    if (x != first) { all_equal = false; break; }
  if (all_equal) return first;
  return stable_sum(values) / static_cast<double>(values.size());
}

}  // namespace floodda

#endif  // FLOODDA_COMMON_HPP
