#include "bridge/protocol.hpp"

#include <cmath>
#include <limits>

namespace bridge {

namespace {

const char* kOperationNames[] = {"Evaluate", "Gradient", "ApplyJacobian", "ApplyHessian"};

ProtocolError malformed(std::string message) {
  return {ErrorKind::MalformedRequest, std::move(message)};
}

ProtocolError bad_dims(std::string message) {
  return {ErrorKind::InvalidDimensions, std::move(message)};
}

bool is_finite_number(const nlohmann::json& j) {
  if (j.is_number_float()) return std::isfinite(j.get<double>());
  return j.is_number();
}

// Extracts a list-of-vectors field ("input" or "output").
std::optional<std::vector<Vector>> parse_vector_list(const nlohmann::json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<Vector> out;
  out.reserve(j.size());
  for (const auto& row : j) {
    if (!row.is_array()) return std::nullopt;
    Vector v;
    v.reserve(row.size());
    for (const auto& x : row) {
      if (!is_finite_number(x)) return std::nullopt;
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::optional<Vector> parse_vector(const nlohmann::json& j) {
  if (!j.is_array()) return std::nullopt;
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!is_finite_number(x)) return std::nullopt;
    v.push_back(x.get<double>());
  }
  return v;
}

std::optional<int> parse_index(const nlohmann::json& j) {
  if (!j.is_number_integer()) return std::nullopt;
  auto v = j.get<std::int64_t>();
  if (v < 0 || v > std::numeric_limits<int>::max()) return std::nullopt;
  return static_cast<int>(v);
}

nlohmann::json to_json(const std::vector<Vector>& vecs) {
  auto arr = nlohmann::json::array();
  for (const auto& v : vecs) arr.push_back(v);
  return arr;
}

}  // namespace

std::string_view operation_name(Operation op) {
  return kOperationNames[static_cast<int>(op)];
}

std::string operation_path(Operation op) {
  return "/" + std::string(operation_name(op));
}

bool Capabilities::supports(Operation op) const {
  switch (op) {
    case Operation::Evaluate: return evaluate;
    case Operation::Gradient: return gradient;
    case Operation::ApplyJacobian: return apply_jacobian;
    case Operation::ApplyHessian: return apply_hessian;
  }
  return false;
}

bool ModelDescriptor::valid() const {
  if (name.empty() || input_sizes.empty() || output_sizes.empty() || !supports.any()) return false;
  for (int n : input_sizes)
    if (n < 1) return false;
  for (int m : output_sizes)
    if (m < 1) return false;
  return true;
}

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::UnsupportedOperation: return "UnsupportedOperation";
    case ErrorKind::InvalidDimensions: return "InvalidDimensions";
    case ErrorKind::MalformedRequest: return "MalformedRequest";
    case ErrorKind::ModelFailure: return "ModelFailure";
    case ErrorKind::Unavailable: return "Unavailable";
  }
  return "ModelFailure";
}

std::optional<ErrorKind> error_kind_from_name(std::string_view name) {
  for (auto kind : {ErrorKind::UnknownModel, ErrorKind::UnsupportedOperation,
                    ErrorKind::InvalidDimensions, ErrorKind::MalformedRequest,
                    ErrorKind::ModelFailure, ErrorKind::Unavailable}) {
    if (error_kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ModelFailure: return 500;
    case ErrorKind::Unavailable: return 503;
    default: return 400;
  }
}

bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const ParameterBlock& block) {
  for (const auto& v : block)
    if (!all_finite(v)) return false;
  return true;
}

bool config_finite(const Config& config) {
  if (config.is_number_float()) return std::isfinite(config.get<double>());
  if (config.is_object() || config.is_array()) {
    for (const auto& item : config)
      if (!config_finite(item)) return false;
  }
  return true;
}

std::optional<ProtocolError> validate(const OperationRequest& req) {
  if (req.model_name.empty()) return malformed("model name is empty");
  if (req.parameters.empty()) return bad_dims("request carries no input vectors");
  if (!all_finite(req.parameters)) return malformed("non-finite value in input");
  if (!req.config.is_object()) return malformed("config must be a JSON object");
  if (!config_finite(req.config)) return malformed("non-finite value in config");
  if (!all_finite(req.sensitivity) || !all_finite(req.vec))
    return malformed("non-finite value in sens/vec");

  const bool has_sens = !req.sensitivity.empty();
  const bool has_vec = !req.vec.empty();
  switch (req.operation) {
    case Operation::Evaluate:
      if (req.out_wrt || req.in_wrt || req.in_wrt2 || has_sens || has_vec)
        return malformed("Evaluate carries no derivative fields");
      break;
    case Operation::Gradient:
      if (!req.out_wrt || !req.in_wrt || !has_sens)
        return malformed("Gradient requires outWrt, inWrt and sens");
      if (req.in_wrt2 || has_vec) return malformed("Gradient carries no inWrt2/vec");
      break;
    case Operation::ApplyJacobian:
      if (!req.out_wrt || !req.in_wrt || !has_vec)
        return malformed("ApplyJacobian requires outWrt, inWrt and vec");
      if (req.in_wrt2 || has_sens) return malformed("ApplyJacobian carries no inWrt2/sens");
      break;
    case Operation::ApplyHessian:
      if (!req.out_wrt || !req.in_wrt || !req.in_wrt2 || !has_sens || !has_vec)
        return malformed("ApplyHessian requires outWrt, inWrt1, inWrt2, sens and vec");
      break;
  }
  if ((req.out_wrt && *req.out_wrt < 0) || (req.in_wrt && *req.in_wrt < 0) ||
      (req.in_wrt2 && *req.in_wrt2 < 0))
    return bad_dims("negative block index");
  return std::nullopt;
}

std::optional<ProtocolError> validate_against(const OperationRequest& req,
                                              const ModelDescriptor& desc) {
  if (req.model_name != desc.name)
    return ProtocolError{ErrorKind::UnknownModel, "no model named '" + req.model_name + "'"};
  if (!desc.supports.supports(req.operation))
    return ProtocolError{ErrorKind::UnsupportedOperation,
                         std::string(operation_name(req.operation)) + " not supported by '" +
                             desc.name + "'"};
  if (auto err = validate(req)) return err;

  if (req.parameters.size() != desc.input_sizes.size())
    return bad_dims("expected " + std::to_string(desc.input_sizes.size()) +
                    " input vectors, got " + std::to_string(req.parameters.size()));
  for (std::size_t i = 0; i < req.parameters.size(); ++i) {
    if (req.parameters[i].size() != static_cast<std::size_t>(desc.input_sizes[i]))
      return bad_dims("input " + std::to_string(i) + " has length " +
                      std::to_string(req.parameters[i].size()) + ", expected " +
                      std::to_string(desc.input_sizes[i]));
  }

  const auto in_range = [](int idx, std::size_t n) { return idx >= 0 && static_cast<std::size_t>(idx) < n; };
  if (req.out_wrt && !in_range(*req.out_wrt, desc.output_sizes.size()))
    return bad_dims("outWrt out of range");
  if (req.in_wrt && !in_range(*req.in_wrt, desc.input_sizes.size()))
    return bad_dims("inWrt out of range");
  if (req.in_wrt2 && !in_range(*req.in_wrt2, desc.input_sizes.size()))
    return bad_dims("inWrt2 out of range");

  switch (req.operation) {
    case Operation::Evaluate:
      break;
    case Operation::Gradient:
      if (req.sensitivity.size() != static_cast<std::size_t>(desc.output_sizes[*req.out_wrt]))
        return bad_dims("sens length does not match output block " + std::to_string(*req.out_wrt));
      break;
    case Operation::ApplyJacobian:
      if (req.vec.size() != static_cast<std::size_t>(desc.input_sizes[*req.in_wrt]))
        return bad_dims("vec length does not match input block " + std::to_string(*req.in_wrt));
      break;
    case Operation::ApplyHessian:
      if (req.sensitivity.size() != static_cast<std::size_t>(desc.output_sizes[*req.out_wrt]))
        return bad_dims("sens length does not match output block " + std::to_string(*req.out_wrt));
      if (req.vec.size() != static_cast<std::size_t>(desc.input_sizes[*req.in_wrt2]))
        return bad_dims("vec length does not match input block " + std::to_string(*req.in_wrt2));
      break;
  }
  return std::nullopt;
}

std::optional<ProtocolError> validate_response(const OperationResponse& resp,
                                               const OperationRequest& req,
                                               const ModelDescriptor& desc) {
  for (const auto& v : resp.outputs)
    if (!all_finite(v))
      return ProtocolError{ErrorKind::ModelFailure, "non-finite value in model output"};

  const auto single = [&](std::size_t expected, const char* what) -> std::optional<ProtocolError> {
    if (resp.outputs.size() != 1 || resp.outputs[0].size() != expected)
      return ProtocolError{ErrorKind::ModelFailure,
                           std::string(what) + " output has unexpected shape"};
    return std::nullopt;
  };

  switch (req.operation) {
    case Operation::Evaluate: {
      if (resp.outputs.size() != desc.output_sizes.size())
        return ProtocolError{ErrorKind::ModelFailure, "wrong number of output vectors"};
      for (std::size_t i = 0; i < resp.outputs.size(); ++i)
        if (resp.outputs[i].size() != static_cast<std::size_t>(desc.output_sizes[i]))
          return ProtocolError{ErrorKind::ModelFailure,
                               "output " + std::to_string(i) + " has unexpected length"};
      return std::nullopt;
    }
    case Operation::Gradient:
      return single(static_cast<std::size_t>(desc.input_sizes[*req.in_wrt]), "Gradient");
    case Operation::ApplyJacobian:
      return single(static_cast<std::size_t>(desc.output_sizes[*req.out_wrt]), "ApplyJacobian");
    case Operation::ApplyHessian:
      return single(static_cast<std::size_t>(desc.input_sizes[*req.in_wrt]), "ApplyHessian");
  }
  return std::nullopt;
}

std::string encode_request(const OperationRequest& req) {
  nlohmann::json body;
  body["name"] = req.model_name;
  body["input"] = to_json(req.parameters);
  body["config"] = req.config;
  switch (req.operation) {
    case Operation::Evaluate:
      break;
    case Operation::Gradient:
      body["outWrt"] = *req.out_wrt;
      body["inWrt"] = *req.in_wrt;
      body["sens"] = req.sensitivity;
      break;
    case Operation::ApplyJacobian:
      body["outWrt"] = *req.out_wrt;
      body["inWrt"] = *req.in_wrt;
      body["vec"] = req.vec;
      break;
    case Operation::ApplyHessian:
      body["outWrt"] = *req.out_wrt;
      body["inWrt1"] = *req.in_wrt;
      body["inWrt2"] = *req.in_wrt2;
      body["sens"] = req.sensitivity;
      body["vec"] = req.vec;
      break;
  }
  return body.dump();
}

Expected<OperationRequest> decode_request(std::string_view raw, Operation op) {
  auto body = nlohmann::json::parse(raw, nullptr, false);
  if (body.is_discarded()) return malformed("request body is not valid JSON");
  if (!body.is_object()) return malformed("request body must be a JSON object");

  OperationRequest req;
  req.operation = op;

  auto expected_keys = std::vector<std::string>{"name", "input", "config"};
  switch (op) {
    case Operation::Evaluate: break;
    case Operation::Gradient:
      expected_keys.insert(expected_keys.end(), {"outWrt", "inWrt", "sens"});
      break;
    case Operation::ApplyJacobian:
      expected_keys.insert(expected_keys.end(), {"outWrt", "inWrt", "vec"});
      break;
    case Operation::ApplyHessian:
      expected_keys.insert(expected_keys.end(), {"outWrt", "inWrt1", "inWrt2", "sens", "vec"});
      break;
  }
  for (const auto& item : body.items()) {
    bool known = false;
    for (const auto& k : expected_keys) known = known || k == item.key();
    if (!known) return malformed("unexpected field '" + item.key() + "'");
  }

  if (!body.contains("name") || !body["name"].is_string())
    return malformed("missing string field 'name'");
  req.model_name = body["name"].get<std::string>();

  if (!body.contains("input")) return malformed("missing field 'input'");
  auto params = parse_vector_list(body["input"]);
  if (!params) return malformed("'input' must be a list of vectors of finite numbers");
  req.parameters = std::move(*params);

  if (body.contains("config")) {
    if (!body["config"].is_object()) return malformed("'config' must be a JSON object");
    req.config = body["config"];
  }

  const auto need_index = [&](const char* key, std::optional<int>& target) -> std::optional<ProtocolError> {
    if (!body.contains(key)) return malformed(std::string("missing field '") + key + "'");
    auto idx = parse_index(body[key]);
    if (!idx) return malformed(std::string("'") + key + "' must be a non-negative integer");
    target = idx;
    return std::nullopt;
  };
  const auto need_vector = [&](const char* key, Vector& target) -> std::optional<ProtocolError> {
    if (!body.contains(key)) return malformed(std::string("missing field '") + key + "'");
    auto v = parse_vector(body[key]);
    if (!v || v->empty()) return malformed(std::string("'") + key + "' must be a non-empty vector");
    target = std::move(*v);
    return std::nullopt;
  };

  switch (op) {
    case Operation::Evaluate:
      break;
    case Operation::Gradient:
      if (auto e = need_index("outWrt", req.out_wrt)) return *e;
      if (auto e = need_index("inWrt", req.in_wrt)) return *e;
      if (auto e = need_vector("sens", req.sensitivity)) return *e;
      break;
    case Operation::ApplyJacobian:
      if (auto e = need_index("outWrt", req.out_wrt)) return *e;
      if (auto e = need_index("inWrt", req.in_wrt)) return *e;
      if (auto e = need_vector("vec", req.vec)) return *e;
      break;
    case Operation::ApplyHessian:
      if (auto e = need_index("outWrt", req.out_wrt)) return *e;
      if (auto e = need_index("inWrt1", req.in_wrt)) return *e;
      if (auto e = need_index("inWrt2", req.in_wrt2)) return *e;
      if (auto e = need_vector("sens", req.sensitivity)) return *e;
      if (auto e = need_vector("vec", req.vec)) return *e;
      break;
  }

  if (auto err = validate(req)) return *err;
  return req;
}

std::string encode_response(const OperationResponse& resp) {
  nlohmann::json body;
  body["output"] = to_json(resp.outputs);
  return body.dump();
}

Expected<OperationResponse> decode_response(std::string_view raw) {
  auto body = nlohmann::json::parse(raw, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("output"))
    return malformed("response body must be a JSON object with 'output'");
  auto outputs = parse_vector_list(body["output"]);
  if (!outputs) return malformed("'output' must be a list of vectors of finite numbers");
  return OperationResponse{std::move(*outputs)};
}

std::string encode_error(const ProtocolError& err) {
  nlohmann::json body;
  body["error"]["type"] = std::string(error_kind_name(err.kind));
  body["error"]["message"] = err.message;
  return body.dump();
}

std::optional<ProtocolError> decode_error(std::string_view raw) {
  auto body = nlohmann::json::parse(raw, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("error")) return std::nullopt;
  const auto& err = body["error"];
  if (!err.is_object() || !err.contains("type") || !err["type"].is_string()) return std::nullopt;
  auto kind = error_kind_from_name(err["type"].get<std::string>());
  if (!kind) return std::nullopt;
  std::string message;
  if (err.contains("message") && err["message"].is_string())
    message = err["message"].get<std::string>();
  return ProtocolError{*kind, std::move(message)};
}

}  // namespace bridge
