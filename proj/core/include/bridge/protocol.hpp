#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bridge {

using Vector = std::vector<double>;

/// One vector per declared input block of the target model.
using ParameterBlock = std::vector<Vector>;

/// Open key/value options forwarded verbatim to the model. Keys are kept
/// lexicographically sorted so encoding is canonical.
using Config = nlohmann::json;

enum class Operation { Evaluate, Gradient, ApplyJacobian, ApplyHessian };

std::string_view operation_name(Operation op);

/// HTTP route for an operation, e.g. "/Evaluate".
std::string operation_path(Operation op);

struct Capabilities {
  bool evaluate = false;
  bool gradient = false;
  bool apply_jacobian = false;
  bool apply_hessian = false;

  bool supports(Operation op) const;
  bool any() const { return evaluate || gradient || apply_jacobian || apply_hessian; }
  bool operator==(const Capabilities&) const = default;
};

/// A named model's shape and supported operations.
struct ModelDescriptor {
  std::string name;
  std::vector<int> input_sizes;
  std::vector<int> output_sizes;
  Capabilities supports;

  bool valid() const;
  bool operator==(const ModelDescriptor&) const = default;
};

enum class ErrorKind {
  UnknownModel,
  UnsupportedOperation,
  InvalidDimensions,
  MalformedRequest,
  ModelFailure,
  Unavailable,
};

std::string_view error_kind_name(ErrorKind kind);
std::optional<ErrorKind> error_kind_from_name(std::string_view name);

/// UnknownModel/UnsupportedOperation/InvalidDimensions/MalformedRequest -> 400,
/// ModelFailure -> 500, Unavailable -> 503.
int http_status(ErrorKind kind);

struct ProtocolError {
  ErrorKind kind;
  std::string message;
};

/// Minimal value-or-error carrier for protocol-level operations.
template <typename T>
class Expected {
 public:
  Expected(T value) : value_(std::move(value)) {}
  Expected(ProtocolError error) : value_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<T>(value_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(value_); }
  T& value() & { return std::get<T>(value_); }
  T&& value() && { return std::get<T>(std::move(value_)); }
  const ProtocolError& error() const { return std::get<ProtocolError>(value_); }

 private:
  std::variant<T, ProtocolError> value_;
};

/// One model operation call. Which optional fields must be present depends on
/// the operation; see validate(). For ApplyHessian, in_wrt names the first
/// differentiated input block and in_wrt2 the second.
struct OperationRequest {
  std::string model_name;
  Operation operation = Operation::Evaluate;
  ParameterBlock parameters;
  Config config = Config::object();
  std::optional<int> out_wrt;
  std::optional<int> in_wrt;
  std::optional<int> in_wrt2;
  Vector sensitivity;
  Vector vec;

  bool operator==(const OperationRequest&) const = default;
};

/// Evaluate: one vector per output block. Derivative operations: exactly one
/// vector (Gradient: length input_sizes[in_wrt]; ApplyJacobian: length
/// output_sizes[out_wrt]; ApplyHessian: length input_sizes[in_wrt]).
struct OperationResponse {
  std::vector<Vector> outputs;

  bool operator==(const OperationResponse&) const = default;
};

/// Structural validity independent of any descriptor: finite entries, the
/// optional fields required by the operation present, no extraneous ones.
std::optional<ProtocolError> validate(const OperationRequest& req);

/// Full check against a descriptor: name match, capability, all shapes.
std::optional<ProtocolError> validate_against(const OperationRequest& req,
                                              const ModelDescriptor& desc);

/// Expected response shape for a validated request.
std::optional<ProtocolError> validate_response(const OperationResponse& resp,
                                               const OperationRequest& req,
                                               const ModelDescriptor& desc);

/// Canonical JSON body. Equal requests produce identical bytes. The operation
/// itself travels in the route, not the body.
std::string encode_request(const OperationRequest& req);

/// Inverse of encode_request for the given route operation. Never throws on
/// arbitrary bytes; malformed input yields MalformedRequest.
Expected<OperationRequest> decode_request(std::string_view raw, Operation op);

std::string encode_response(const OperationResponse& resp);
Expected<OperationResponse> decode_response(std::string_view raw);

/// Error body, e.g. {"error":{"type":"UnknownModel","message":"..."}}.
std::string encode_error(const ProtocolError& err);
std::optional<ProtocolError> decode_error(std::string_view raw);

inline constexpr int kProtocolVersion = 1;
inline constexpr int kDefaultPort = 4242;

bool all_finite(const Vector& v);
bool all_finite(const ParameterBlock& block);

/// JSON cannot carry NaN/Inf portably; configs with non-finite numbers are
/// rejected before they reach the wire.
bool config_finite(const Config& config);

}  // namespace bridge
