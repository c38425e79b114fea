#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bridge::uq {

enum class DistKind { Uniform, Normal, Triangular, Beta };

/// Parametric 1-D input distribution. Multivariate inputs are products of
/// independent components, one Distribution per component.
class Distribution {
 public:
  static Distribution uniform(double a, double b);
  static Distribution normal(double mu, double sigma);
  /// Symmetric triangular on [a,b] with mode (a+b)/2.
  static Distribution triangular(double a, double b);
  /// Density proportional to (x-a)^alpha (b-x)^beta on [a,b], alpha,beta > 0.
  /// Sampled by rejection under a uniform envelope scaled to the mode.
  static Distribution beta_shape(double a, double b, double alpha, double beta);

  DistKind kind() const { return kind_; }

  double sample(std::mt19937_64& rng) const;

  /// Log density; -inf outside the support.
  double log_pdf(double x) const;

  /// Inverse CDF; implemented for Uniform, Normal and Triangular.
  bool has_quantile() const { return kind_ != DistKind::Beta; }
  double quantile(double u) const;

  /// Support bounds (+-inf for Normal).
  double support_lo() const;
  double support_hi() const;

 private:
  Distribution(DistKind kind, double p0, double p1, double p2 = 0, double p3 = 0);

  DistKind kind_;
  // Uniform/Triangular/Beta: p0_=a, p1_=b; Normal: p0_=mu, p1_=sigma.
  double p0_, p1_, p2_, p3_;
  double log_norm_ = 0.0;  // Beta: log of the normalization integral
  double log_peak_ = 0.0;  // Beta: log of the unnormalized density at the mode
};

/// n i.i.d. draws; deterministic given the seed. A rejection sampler that
/// exceeds 10^6 iterations for one draw throws (degenerate envelope).
std::vector<double> sample(const Distribution& dist, std::size_t n, std::uint64_t seed);

/// One draw per component, in order.
std::vector<double> sample_point(const std::vector<Distribution>& components,
                                 std::mt19937_64& rng);

/// n i.i.d. points of the product distribution.
std::vector<std::vector<double>> sample_points(const std::vector<Distribution>& components,
                                               std::size_t n, std::uint64_t seed);

}  // namespace bridge::uq
