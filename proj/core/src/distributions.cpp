#include "bridge/distributions.hpp"

#include "bridge/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bridge::uq {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr std::size_t kRejectionCap = 1000000;
}  // namespace

Distribution::Distribution(DistKind kind, double p0, double p1, double p2, double p3)
    : kind_(kind), p0_(p0), p1_(p1), p2_(p2), p3_(p3) {}

Distribution Distribution::uniform(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("uniform: requires a < b");
  return Distribution(DistKind::Uniform, a, b);
}

Distribution Distribution::normal(double mu, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("normal: requires sigma > 0");
  return Distribution(DistKind::Normal, mu, sigma);
}

Distribution Distribution::triangular(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("triangular: requires a < b");
  return Distribution(DistKind::Triangular, a, b);
}

Distribution Distribution::beta_shape(double a, double b, double alpha, double beta) {
  if (!(a < b)) throw std::invalid_argument("beta: requires a < b");
  if (!(alpha > 0) || !(beta > 0)) throw std::invalid_argument("beta: requires alpha, beta > 0");
  Distribution d(DistKind::Beta, a, b, alpha, beta);
  // integral of (x-a)^alpha (b-x)^beta over [a,b] = (b-a)^(alpha+beta+1) B(alpha+1, beta+1)
  d.log_norm_ = (alpha + beta + 1) * std::log(b - a) + std::lgamma(alpha + 1) +
                std::lgamma(beta + 1) - std::lgamma(alpha + beta + 2);
  const double mode = a + (b - a) * alpha / (alpha + beta);
  d.log_peak_ = alpha * std::log(mode - a) + beta * std::log(b - mode);
  return d;
}

double Distribution::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case DistKind::Uniform:
    case DistKind::Normal:
    case DistKind::Triangular:
      return quantile(uniform_open(rng));
    case DistKind::Beta: {
      const double a = p0_, b = p1_, alpha = p2_, beta = p3_;
      for (std::size_t it = 0; it < kRejectionCap; ++it) {
        const double x = a + uniform_open(rng) * (b - a);
        const double log_ratio =
            alpha * std::log(x - a) + beta * std::log(b - x) - log_peak_;
        if (std::log(uniform_open(rng)) <= log_ratio) return x;
      }
      throw std::runtime_error("beta rejection sampler exceeded iteration cap");
    }
  }
  throw std::logic_error("unreachable");
}

double Distribution::log_pdf(double x) const {
  switch (kind_) {
    case DistKind::Uniform:
      return (x >= p0_ && x <= p1_) ? -std::log(p1_ - p0_) : kNegInf;
    case DistKind::Normal: {
      const double z = (x - p0_) / p1_;
      return -kLogSqrt2Pi - std::log(p1_) - 0.5 * z * z;
    }
    case DistKind::Triangular: {
      const double a = p0_, b = p1_, c = 0.5 * (a + b);
      if (x < a || x > b) return kNegInf;
      const double h = (x <= c) ? 2 * (x - a) / ((b - a) * (c - a))
                                : 2 * (b - x) / ((b - a) * (b - c));
      return h > 0 ? std::log(h) : kNegInf;
    }
    case DistKind::Beta: {
      if (x <= p0_ || x >= p1_) return kNegInf;
      return p2_ * std::log(x - p0_) + p3_ * std::log(p1_ - x) - log_norm_;
    }
  }
  return kNegInf;
}

double Distribution::quantile(double u) const {
  if (!(u > 0 && u < 1)) throw std::domain_error("quantile: u must lie in (0,1)");
  switch (kind_) {
    case DistKind::Uniform:
      return p0_ + u * (p1_ - p0_);
    case DistKind::Normal:
      return boost::math::quantile(boost::math::normal_distribution<>(p0_, p1_), u);
    case DistKind::Triangular: {
      const double a = p0_, b = p1_, c = 0.5 * (a + b);
      if (u <= 0.5) return a + std::sqrt(u * (b - a) * (c - a));
      return b - std::sqrt((1 - u) * (b - a) * (b - c));
    }
    case DistKind::Beta:
      throw std::domain_error("beta: no closed-form quantile");
  }
  throw std::logic_error("unreachable");
}

double Distribution::support_lo() const {
  return kind_ == DistKind::Normal ? -kInf : p0_;
}

double Distribution::support_hi() const {
  return kind_ == DistKind::Normal ? kInf : p1_;
}

std::vector<double> sample(const Distribution& dist, std::size_t n, std::uint64_t seed) {
  auto rng = make_stream(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dist.sample(rng));
  return out;
}

std::vector<double> sample_point(const std::vector<Distribution>& components,
                                 std::mt19937_64& rng) {
  std::vector<double> point;
  point.reserve(components.size());
  for (const auto& d : components) point.push_back(d.sample(rng));
  return point;
}

std::vector<std::vector<double>> sample_points(const std::vector<Distribution>& components,
                                               std::size_t n, std::uint64_t seed) {
  auto rng = make_stream(seed);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_point(components, rng));
  return out;
}

}  // namespace bridge::uq
