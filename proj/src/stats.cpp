#include "eaglass/stats.hpp"

#include <algorithm>
#include <cmath>

#include "eaglass/error.hpp"

namespace eaglass::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  // Constant samples: the rounded mean would leave a spurious residue.
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

double standard_error(std::span<const double> x) {
  return x.empty() ? 0.0 : std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double quantize(double x) {
  constexpr double kGrid = 4294967296.0;
  return std::nearbyint(x * kGrid) / kGrid;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

Bootstrap bootstrap(std::size_t items, int resamples, const SeedSpec& seed,
                    const std::function<double(std::span<const std::size_t>)>& statistic) {
  Bootstrap b;
  b.resamples = resamples;
  b.seed = seed;
  if (items == 0 || resamples <= 0) return b;
  auto rng = seed.engine();
  std::uniform_int_distribution<std::size_t> pick(0, items - 1);
  std::vector<std::size_t> idx(items);
  b.replicates.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& i : idx) i = pick(rng);
    b.replicates.push_back(statistic(idx));
  }
  b.std_error = stddev(b.replicates);
  b.ci_lo = percentile(b.replicates, 0.025);
  b.ci_hi = percentile(b.replicates, 0.975);
  return b;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("least squares needs at least two points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error("least squares with constant abscissa");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace eaglass::stats
