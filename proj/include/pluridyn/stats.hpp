#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pluridyn {

struct MeanErr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Mean with the standard error of the mean (sample variance / n).
MeanErr mean_stderr(std::span<const double> xs);

double variance(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares y = slope*x + intercept; needs >= 2 points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);

/// Kolmogorov limiting distribution complement P(K > t).
double kolmogorov_sf(double t);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF; the p-value
/// uses the asymptotic series with the Stephens small-sample correction.
KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf);

/// Mean of block means, with the standard error from the spread of
/// non-overlapping blocks (batch means).
MeanErr batch_means(std::span<const double> xs, std::size_t blocks);

}  // namespace pluridyn
