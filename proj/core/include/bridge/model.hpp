#pragma once

#include "bridge/protocol.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace bridge {

/// Thrown when a model operation cannot be completed; carries the protocol
/// error that will appear on (or came off) the wire.
class BridgeError : public std::runtime_error {
 public:
  explicit BridgeError(ProtocolError err)
      : std::runtime_error(std::string(error_kind_name(err.kind)) + ": " + err.message),
        error_(std::move(err)) {}

  const ProtocolError& error() const { return error_; }
  ErrorKind kind() const { return error_.kind; }

 private:
  ProtocolError error_;
};

/// A deterministic map from parameter blocks to output vectors, plus optional
/// derivative actions. Served models and remote proxies share this interface,
/// so UQ drivers do not care where an evaluation actually runs.
///
/// Implementations must keep descriptor().supports in sync with the
/// operations they actually implement; the default derivative bodies throw
/// UnsupportedOperation.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelDescriptor descriptor() const = 0;

  virtual std::vector<Vector> evaluate(const ParameterBlock& parameters,
                                       const Config& config) = 0;

  /// v^T J_F restricted to one (output block, input block) pair.
  virtual Vector gradient(int out_wrt, int in_wrt, const ParameterBlock& parameters,
                          const Vector& sensitivity, const Config& config);

  /// J_F v for one (output block, input block) pair.
  virtual Vector apply_jacobian(int out_wrt, int in_wrt, const ParameterBlock& parameters,
                                const Vector& vec, const Config& config);

  virtual Vector apply_hessian(int out_wrt, int in_wrt1, int in_wrt2,
                               const ParameterBlock& parameters, const Vector& sensitivity,
                               const Vector& vec, const Config& config);
};

/// Per-item outcome of a batched evaluation.
using BatchItem = Expected<std::vector<Vector>>;

/// Evaluates every parameter block in `batch`, keeping at most `parallelism`
/// calls in flight. Results are returned in input order; a failing item is
/// reported in place without aborting the rest. The model must tolerate
/// concurrent evaluate() calls when parallelism > 1 (remote proxies do).
std::vector<BatchItem> evaluate_batch(Model& model, const std::vector<ParameterBlock>& batch,
                                      const Config& config, int parallelism);

}  // namespace bridge
