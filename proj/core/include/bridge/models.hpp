#pragma once

#include "bridge/model.hpp"

#include <array>
#include <chrono>
#include <string>
#include <vector>

namespace bridge::models {

/// F([x]) = [2x]; the minimal evaluate-only model.
class DoublingModel : public Model {
 public:
  explicit DoublingModel(std::string name = "doubling") : name_(std::move(name)) {}

  ModelDescriptor descriptor() const override;
  std::vector<Vector> evaluate(const ParameterBlock& parameters, const Config& config) override;

 private:
  std::string name_;
};

/// Identity map that sleeps before answering; stands in for a long-running
/// solver. Config key "delay_ms" overrides the configured delay per call.
class DelayModel : public Model {
 public:
  explicit DelayModel(int dimension = 1,
                      std::chrono::milliseconds delay = std::chrono::milliseconds(250),
                      std::string name = "delay")
      : dimension_(dimension), delay_(delay), name_(std::move(name)) {}

  ModelDescriptor descriptor() const override;
  std::vector<Vector> evaluate(const ParameterBlock& parameters, const Config& config) override;

 private:
  int dimension_;
  std::chrono::milliseconds delay_;
  std::string name_;
};

/// F(theta) = A theta with exact derivative actions: the Jacobian is A
/// everywhere and the Hessian action vanishes.
class LinearModel : public Model {
 public:
  /// Row-major m x n matrix; rows must be non-empty and of equal length.
  explicit LinearModel(std::vector<Vector> matrix, std::string name = "linear");

  ModelDescriptor descriptor() const override;
  std::vector<Vector> evaluate(const ParameterBlock& parameters, const Config& config) override;
  Vector gradient(int out_wrt, int in_wrt, const ParameterBlock& parameters,
                  const Vector& sensitivity, const Config& config) override;
  Vector apply_jacobian(int out_wrt, int in_wrt, const ParameterBlock& parameters,
                        const Vector& vec, const Config& config) override;
  Vector apply_hessian(int out_wrt, int in_wrt1, int in_wrt2, const ParameterBlock& parameters,
                       const Vector& sensitivity, const Vector& vec,
                       const Config& config) override;

 private:
  std::vector<Vector> matrix_;  // m rows of length n
  std::string name_;
};

/// Two-dimensional Gaussian log-density with a level-dependent smooth bias:
/// log pi_l(theta) = log N(theta; mu, diag(sigma2)) + b0 * 2^-l * (sin t1 + cos t2).
/// Config key "level" selects l (default: finest level L); the bias halves
/// per level, so the finest level is closest to the exact Gaussian.
class MultiFidelityGaussianPosterior : public Model {
 public:
  struct Params {
    int levels = 3;  // levels 0..levels-1, level levels-1 finest
    std::array<double, 2> mu{0.0, 0.0};
    std::array<double, 2> sigma2{1.0, 1.0};
    double bias_amplitude = 0.5;  // b0
  };

  explicit MultiFidelityGaussianPosterior(Params params = {}, std::string name = "posterior");

  ModelDescriptor descriptor() const override;
  std::vector<Vector> evaluate(const ParameterBlock& parameters, const Config& config) override;

  /// Direct log-density access for in-process samplers.
  double log_density(int level, double t1, double t2) const;
  int finest_level() const { return params_.levels - 1; }

 private:
  Params params_;
  std::string name_;
};

/// Smooth positive scalar response on a 2-D parameter (speed-like and
/// draft-like inputs): R(f, d) = exp(0.3 f) * (1 + 0.1 (d - d_mid)^2).
class SmoothForwardModel : public Model {
 public:
  explicit SmoothForwardModel(double d_mid = -6.16, std::string name = "smooth")
      : d_mid_(d_mid), name_(std::move(name)) {}

  ModelDescriptor descriptor() const override;
  std::vector<Vector> evaluate(const ParameterBlock& parameters, const Config& config) override;

  double response(double f, double d) const;

 private:
  double d_mid_;
  std::string name_;
};

}  // namespace bridge::models
