#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "eaglass/disorder.hpp"

namespace eaglass::stats {

double mean(std::span<const double> x);
// Unbiased (n - 1) sample variance; 0 for fewer than two samples.
double variance(std::span<const double> x);
double stddev(std::span<const double> x);
// Standard error of the mean.
double standard_error(std::span<const double> x);

// Rounds to a multiple of 2^-32 so that sums and differences of moderate
// size are exact in binary64.
double quantize(double x);

struct Bootstrap {
  double std_error = 0.0;
  double ci_lo = 0.0;  // 2.5% percentile
  double ci_hi = 0.0;  // 97.5% percentile
  int resamples = 0;
  SeedSpec seed;
  std::vector<double> replicates;
};

// Resamples item indices with replacement; `statistic` sees the drawn indices.
Bootstrap bootstrap(std::size_t items, int resamples, const SeedSpec& seed,
                    const std::function<double(std::span<const std::size_t>)>& statistic);

double percentile(std::vector<double> v, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace eaglass::stats
