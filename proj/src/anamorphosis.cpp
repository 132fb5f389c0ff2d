#include "floodda/anamorphosis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "floodda/common.hpp"

namespace floodda {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ContractError("std_normal_quantile: p must lie in (0,1), got " +
                        std::to_string(p));
  }
  // Reduce to the lower half by symmetry. 1 - p is exact for p >= 0.5
  // (Sterbenz), and the Halley residual below only keeps its relative
  // accuracy where cdf(x) is a small number, not a value next to 1.
  if (p > 0.5) return -std_normal_quantile(1.0 - p);

  // Acklam's rational approximation (relative error ~1.15e-9), split into
  // lower tail / central / upper tail regions.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  // One Halley refinement against the erfc-based CDF.
  const double e = std_normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double AnamorphosisFn::forward(double y) const {
  if (is_identity) return y;
  const auto& xs = knots_physical;
  const auto& zs = knots_gaussian;
  if (y <= xs.front()) return zs.front() + (y - xs.front()) * lower_tail_slope;
  if (y >= xs.back()) return zs.back() + (y - xs.back()) * upper_tail_slope;
  // upper_bound puts an exact knot value at the start of its segment, so
  // forward(knot) reproduces the paired Gaussian knot bit-exactly.
  const auto it = std::upper_bound(xs.begin(), xs.end(), y);
  const size_t i = static_cast<size_t>(it - xs.begin()) - 1;
  const double t = (y - xs[i]) / (xs[i + 1] - xs[i]);
  return zs[i] + t * (zs[i + 1] - zs[i]);
}

double AnamorphosisFn::inverse(double z) const {
  if (is_identity) return z;
  const auto& xs = knots_physical;
  const auto& zs = knots_gaussian;
  if (z <= zs.front()) return xs.front() + (z - zs.front()) / lower_tail_slope;
  if (z >= zs.back()) return xs.back() + (z - zs.back()) / upper_tail_slope;
  const auto it = std::upper_bound(zs.begin(), zs.end(), z);
  const size_t i = static_cast<size_t>(it - zs.begin()) - 1;
  const double t = (z - zs[i]) / (zs[i + 1] - zs[i]);
  return xs[i] + t * (xs[i + 1] - xs[i]);
}

AnamorphosisFn identity_anamorphosis() {
  AnamorphosisFn fn;
  fn.knots_physical = {0.0, 1.0};
  fn.knots_gaussian = {0.0, 1.0};
  fn.lower_tail_slope = 1.0;
  fn.upper_tail_slope = 1.0;
  fn.is_identity = true;
  return fn;
}

AnamorphosisFn fit_anamorphosis(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) {
      throw ContractError("fit_anamorphosis: non-finite sample");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  if (n < 2 || sorted.front() == sorted.back()) {
    throw DegenerateDistributionError(
        "fit_anamorphosis: need at least 2 distinct samples");
  }

  AnamorphosisFn fn;
  fn.knots_physical.reserve(n);
  fn.knots_gaussian.reserve(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    double gsum = 0.0;
    while (j < n && sorted[j] == sorted[i]) {
      const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      gsum += std_normal_quantile(p);
      ++j;
    }
    fn.knots_physical.push_back(sorted[i]);
    fn.knots_gaussian.push_back(gsum / static_cast<double>(j - i));
    i = j;
  }

  const size_t m = fn.knots_physical.size();
  fn.lower_tail_slope = (fn.knots_gaussian[1] - fn.knots_gaussian[0]) /
                        (fn.knots_physical[1] - fn.knots_physical[0]);
  fn.upper_tail_slope = (fn.knots_gaussian[m - 1] - fn.knots_gaussian[m - 2]) /
                        (fn.knots_physical[m - 1] - fn.knots_physical[m - 2]);
  return fn;
}

void write_knots_csv(const AnamorphosisFn& fn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "physical,gaussian\n";
  char buf[80];
  for (size_t i = 0; i < fn.knots_physical.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", fn.knots_physical[i],
                  fn.knots_gaussian[i]);
    out << buf;
  }
}

}  // namespace floodda
