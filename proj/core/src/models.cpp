#include "bridge/models.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace bridge::models {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_finite_inputs(const ParameterBlock& parameters) {
  if (!all_finite(parameters))
    throw BridgeError({ErrorKind::ModelFailure, "non-finite parameter value"});
}

}  // namespace

// ---------------------------------------------------------------- Doubling

ModelDescriptor DoublingModel::descriptor() const {
  return {name_, {1}, {1}, {.evaluate = true}};
}

std::vector<Vector> DoublingModel::evaluate(const ParameterBlock& parameters, const Config&) {
  check_finite_inputs(parameters);
  return {{parameters[0][0] * 2.0}};
}

// ------------------------------------------------------------------- Delay

ModelDescriptor DelayModel::descriptor() const {
  return {name_, {dimension_}, {dimension_}, {.evaluate = true}};
}

std::vector<Vector> DelayModel::evaluate(const ParameterBlock& parameters, const Config& config) {
  check_finite_inputs(parameters);
  auto delay = delay_;
  if (config.contains("delay_ms")) {
    if (!config["delay_ms"].is_number() || config["delay_ms"].get<double>() < 0)
      throw BridgeError({ErrorKind::ModelFailure, "delay_ms must be a non-negative number"});
    delay = std::chrono::milliseconds(static_cast<long>(config["delay_ms"].get<double>()));
  }
  if (delay.count() > 0) std::this_thread::sleep_for(delay);
  return {parameters[0]};
}

// ------------------------------------------------------------------ Linear

LinearModel::LinearModel(std::vector<Vector> matrix, std::string name)
    : matrix_(std::move(matrix)), name_(std::move(name)) {
  if (matrix_.empty() || matrix_[0].empty())
    throw std::invalid_argument("LinearModel: matrix must be non-empty");
  for (const auto& row : matrix_)
    if (row.size() != matrix_[0].size())
      throw std::invalid_argument("LinearModel: ragged matrix");
}

ModelDescriptor LinearModel::descriptor() const {
  return {name_,
          {static_cast<int>(matrix_[0].size())},
          {static_cast<int>(matrix_.size())},
          {.evaluate = true, .gradient = true, .apply_jacobian = true, .apply_hessian = true}};
}

std::vector<Vector> LinearModel::evaluate(const ParameterBlock& parameters, const Config&) {
  check_finite_inputs(parameters);
  const auto& theta = parameters[0];
  Vector out(matrix_.size(), 0.0);
  for (std::size_t i = 0; i < matrix_.size(); ++i)
    for (std::size_t j = 0; j < theta.size(); ++j) out[i] += matrix_[i][j] * theta[j];
  return {out};
}

Vector LinearModel::gradient(int, int, const ParameterBlock& parameters,
                             const Vector& sensitivity, const Config&) {
  check_finite_inputs(parameters);
  Vector out(matrix_[0].size(), 0.0);  // A^T sens
  for (std::size_t i = 0; i < matrix_.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += matrix_[i][j] * sensitivity[i];
  return out;
}

Vector LinearModel::apply_jacobian(int, int, const ParameterBlock& parameters, const Vector& vec,
                                   const Config&) {
  check_finite_inputs(parameters);
  Vector out(matrix_.size(), 0.0);  // A vec
  for (std::size_t i = 0; i < matrix_.size(); ++i)
    for (std::size_t j = 0; j < vec.size(); ++j) out[i] += matrix_[i][j] * vec[j];
  return out;
}

Vector LinearModel::apply_hessian(int, int, int, const ParameterBlock& parameters, const Vector&,
                                  const Vector&, const Config&) {
  check_finite_inputs(parameters);
  return Vector(matrix_[0].size(), 0.0);
}

// ----------------------------------------------- MultiFidelityGaussianPosterior

MultiFidelityGaussianPosterior::MultiFidelityGaussianPosterior(Params params, std::string name)
    : params_(params), name_(std::move(name)) {
  if (params_.levels < 1)
    throw std::invalid_argument("MultiFidelityGaussianPosterior: levels must be >= 1");
  if (params_.sigma2[0] <= 0 || params_.sigma2[1] <= 0)
    throw std::invalid_argument("MultiFidelityGaussianPosterior: variances must be positive");
}

ModelDescriptor MultiFidelityGaussianPosterior::descriptor() const {
  return {name_, {2}, {1}, {.evaluate = true}};
}

double MultiFidelityGaussianPosterior::log_density(int level, double t1, double t2) const {
  const double z1 = (t1 - params_.mu[0]) * (t1 - params_.mu[0]) / params_.sigma2[0];
  const double z2 = (t2 - params_.mu[1]) * (t2 - params_.mu[1]) / params_.sigma2[1];
  const double log_gauss =
      -kLog2Pi - 0.5 * std::log(params_.sigma2[0] * params_.sigma2[1]) - 0.5 * (z1 + z2);
  const double bias = params_.bias_amplitude * std::pow(2.0, -level);
  return log_gauss + bias * (std::sin(t1) + std::cos(t2));
}

std::vector<Vector> MultiFidelityGaussianPosterior::evaluate(const ParameterBlock& parameters,
                                                             const Config& config) {
  check_finite_inputs(parameters);
  int level = finest_level();
  if (config.contains("level")) {
    if (!config["level"].is_number_integer())
      throw BridgeError({ErrorKind::ModelFailure, "config 'level' must be an integer"});
    level = config["level"].get<int>();
    if (level < 0 || level >= params_.levels)
      throw BridgeError({ErrorKind::ModelFailure,
                         "config 'level' out of range 0.." + std::to_string(finest_level())});
  }
  return {{log_density(level, parameters[0][0], parameters[0][1])}};
}

// ---------------------------------------------------------- SmoothForward

ModelDescriptor SmoothForwardModel::descriptor() const {
  return {name_, {2}, {1}, {.evaluate = true}};
}

double SmoothForwardModel::response(double f, double d) const {
  return std::exp(0.3 * f) * (1.0 + 0.1 * (d - d_mid_) * (d - d_mid_));
}

std::vector<Vector> SmoothForwardModel::evaluate(const ParameterBlock& parameters, const Config&) {
  check_finite_inputs(parameters);
  return {{response(parameters[0][0], parameters[0][1])}};
}

}  // namespace bridge::models
