#include "bridge/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bridge::uq {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double sample_sd(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1));
}

double interquartile_range(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const auto quantile = [&](double p) {
    const double pos = p * (static_cast<double>(x.size()) - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return x[lo] * (1 - frac) + x[hi] * frac;
  };
  return quantile(0.75) - quantile(0.25);
}

double silverman_bandwidth(const std::vector<double>& x) {
  const double sd = sample_sd(x);
  const double iqr = interquartile_range(x);
  double spread = sd;
  if (iqr > 0) spread = std::min(spread, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

}  // namespace

KdeResult::KdeResult(std::vector<double> samples, double bandwidth, bool positive_support,
                     std::size_t grid_points)
    : samples_(std::move(samples)), bandwidth_(bandwidth), positive_support_(positive_support) {
  const auto [lo_it, hi_it] = std::minmax_element(samples_.begin(), samples_.end());
  // 5 bandwidths of margin keep the truncated tail mass below 1e-6 per kernel.
  const double lo = *lo_it - 5 * bandwidth_;
  const double hi = *hi_it + 5 * bandwidth_;
  grid_.resize(grid_points);
  density_.resize(grid_points);
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t = lo + step * static_cast<double>(i);
    grid_[i] = positive_support_ ? std::exp(t) : t;
    density_[i] = pdf(grid_[i]);
  }
}

double KdeResult::pdf(double x) const {
  double jacobian = 1.0;
  if (positive_support_) {
    if (x <= 0) return 0.0;
    jacobian = 1.0 / x;
    x = std::log(x);
  }
  double sum = 0.0;
  for (double s : samples_) {
    const double z = (x - s) / bandwidth_;
    sum += std::exp(-0.5 * z * z);
  }
  return jacobian * kInvSqrt2Pi * sum /
         (bandwidth_ * static_cast<double>(samples_.size()));
}

KdeResult kde(const std::vector<double>& samples, const KdeOptions& options) {
  if (samples.size() < 2) throw std::invalid_argument("kde: needs at least 2 samples");

  std::vector<double> data = samples;
  if (options.positive_support) {
    for (double& x : data) {
      if (x <= 0) throw std::invalid_argument("kde: positive support requires samples > 0");
      x = std::log(x);
    }
  }
  if (sample_sd(data) == 0) throw std::invalid_argument("kde: samples have zero variance");

  const double h = options.bandwidth > 0 ? options.bandwidth : silverman_bandwidth(data);
  const std::size_t grid_points = std::max<std::size_t>(options.grid_points, 2);
  return KdeResult(std::move(data), h, options.positive_support, grid_points);
}

}  // namespace bridge::uq
