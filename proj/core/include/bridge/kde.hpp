#pragma once

#include <cstddef>
#include <vector>

namespace bridge::uq {

struct KdeOptions {
  /// Kernel bandwidth; <= 0 selects Silverman's rule
  /// 0.9 * min(sd, iqr/1.34) * n^(-1/5).
  double bandwidth = 0.0;
  /// Estimate on log(x) and back-transform, for strictly positive data.
  bool positive_support = false;
  std::size_t grid_points = 512;
};

/// Gaussian-kernel density estimate with a precomputed evaluation grid.
class KdeResult {
 public:
  KdeResult(std::vector<double> samples, double bandwidth, bool positive_support,
            std::size_t grid_points);

  double bandwidth() const { return bandwidth_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& density() const { return density_; }

  /// Pointwise estimate; exact mixture sum, not grid interpolation.
  double pdf(double x) const;

 private:
  std::vector<double> samples_;  // log-transformed in positive-support mode
  double bandwidth_;
  bool positive_support_;
  std::vector<double> grid_;
  std::vector<double> density_;
};

/// Requires >= 2 samples with nonzero variance (throws std::invalid_argument
/// otherwise); positive-support mode additionally requires all samples > 0.
KdeResult kde(const std::vector<double>& samples, const KdeOptions& options = {});

}  // namespace bridge::uq
