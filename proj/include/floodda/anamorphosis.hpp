#ifndef FLOODDA_ANAMORPHOSIS_HPP
#define FLOODDA_ANAMORPHOSIS_HPP

#include <span>
#include <string>
#include <vector>

namespace floodda {

/// Standard normal CDF, accurate in both tails (erfc based).
double std_normal_cdf(double x);

/// Standard normal PDF.
double std_normal_pdf(double x);

/// Inverse standard normal CDF. Rational approximation refined with one
/// Halley step; absolute error below 1e-9 for p in [1e-12, 1-1e-12].
/// Throws ContractError unless 0 < p < 1.
double std_normal_quantile(double p);

/// Monotone piecewise-linear normal-score transform. Knots pair empirical
/// values with standard-normal quantiles; outside the knot range the map
/// continues linearly with the first/last segment slope, so it is a strictly
/// increasing bijection on all of R.
struct AnamorphosisFn {
  std::vector<double> knots_physical;
  std::vector<double> knots_gaussian;
  double lower_tail_slope = 1.0;
  double upper_tail_slope = 1.0;
  // Identity transform short-circuits evaluation so inputs pass through
  // bit-exactly (used for gauge observations and degenerate fallbacks).
  bool is_identity = false;

  double forward(double y) const;
  double inverse(double z) const;
};

/// Identity transform: forward and inverse return their argument unchanged.
AnamorphosisFn identity_anamorphosis();

/// Fit the empirical normal-score transform to a sample.
///
/// Samples are sorted and assigned plotting positions p_k = (k - 0.5)/n;
/// the Gaussian knot for each sample is std_normal_quantile(p_k). Exact ties
/// collapse to one knot whose Gaussian value is the mean of the tied
/// quantiles. Tail slopes copy the first/last interior segment.
///
/// Throws DegenerateDistributionError when fewer than 2 distinct finite
/// values remain, and ContractError on non-finite input.
AnamorphosisFn fit_anamorphosis(std::span<const double> samples);

/// Dump knots as CSV `physical,gaussian` (diagnostic).
void write_knots_csv(const AnamorphosisFn& fn, const std::string& path);

}  // namespace floodda

#endif  // FLOODDA_ANAMORPHOSIS_HPP
