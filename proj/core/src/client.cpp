#include "bridge/client.hpp"

#include <httplib.h>

#include <mutex>
#include <vector>

namespace bridge {

namespace {

constexpr time_t kUnlimitedSeconds = 7 * 24 * 3600;

[[noreturn]] void throw_unavailable(const std::string& url, const httplib::Result& result) {
  throw BridgeError({ErrorKind::Unavailable,
                     "no response from " + url + " (" + httplib::to_string(result.error()) + ")"});
}

// Non-200 responses carry a ProtocolError body; surface it as-is.
[[noreturn]] void throw_from_response(const httplib::Response& res) {
  if (auto err = decode_error(res.body)) throw BridgeError(std::move(*err));
  throw BridgeError({ErrorKind::ModelFailure,
                     "unexpected response (HTTP " + std::to_string(res.status) + ")"});
}

}  // namespace

struct RemoteModel::Impl {
  std::string url;
  std::string name;
  ClientOptions options;
  ModelDescriptor descriptor;

  // Idle keep-alive connections; one is checked out per in-flight call.
  std::mutex pool_mutex;
  std::vector<std::unique_ptr<httplib::Client>> pool;

  std::unique_ptr<httplib::Client> checkout() {
    {
      std::lock_guard lock(pool_mutex);
      if (!pool.empty()) {
        auto client = std::move(pool.back());
        pool.pop_back();
        return client;
      }
    }
    auto client = std::make_unique<httplib::Client>(url);
    client->set_connection_timeout(10, 0);
    const time_t secs = options.timeout.count() > 0 ? options.timeout.count() : kUnlimitedSeconds;
    client->set_read_timeout(secs, 0);
    client->set_write_timeout(secs, 0);
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
    return client;
  }

  void checkin(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(pool_mutex);
    pool.push_back(std::move(client));
  }

  httplib::Result roundtrip(const std::string& path, const std::string& body) {
    auto client = checkout();
    auto result = client->Post(path, body, "application/json");
    for (int attempt = 0; !result && attempt < options.retries; ++attempt)
      result = client->Post(path, body, "application/json");
    if (result) checkin(std::move(client));  // drop connections that errored
    return result;
  }

  OperationResponse call(const OperationRequest& request) {
    // Capability and shape problems are caught before any network traffic.
    if (!descriptor.supports.supports(request.operation))
      throw BridgeError({ErrorKind::UnsupportedOperation,
                         std::string(operation_name(request.operation)) +
                             " not supported by '" + name + "'"});
    if (auto err = validate_against(request, descriptor)) throw BridgeError(std::move(*err));

    auto result = roundtrip(operation_path(request.operation), encode_request(request));
    if (!result) throw_unavailable(url, result);
    if (result->status != 200) throw_from_response(*result);

    auto response = decode_response(result->body);
    if (!response) throw BridgeError(response.error());
    if (auto err = validate_response(response.value(), request, descriptor))
      throw BridgeError(std::move(*err));
    return std::move(response).value();
  }
};

RemoteModel::RemoteModel(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
RemoteModel::~RemoteModel() = default;
RemoteModel::RemoteModel(RemoteModel&&) noexcept = default;
RemoteModel& RemoteModel::operator=(RemoteModel&&) noexcept = default;

const std::string& RemoteModel::url() const { return impl_->url; }
const std::string& RemoteModel::name() const { return impl_->name; }

ModelDescriptor RemoteModel::descriptor() const { return impl_->descriptor; }

std::vector<Vector> RemoteModel::evaluate(const ParameterBlock& parameters,
                                          const Config& config) {
  OperationRequest req{.model_name = impl_->name,
                       .operation = Operation::Evaluate,
                       .parameters = parameters,
                       .config = config};
  return impl_->call(req).outputs;
}

Vector RemoteModel::gradient(int out_wrt, int in_wrt, const ParameterBlock& parameters,
                             const Vector& sensitivity, const Config& config) {
  OperationRequest req{.model_name = impl_->name,
                       .operation = Operation::Gradient,
                       .parameters = parameters,
                       .config = config,
                       .out_wrt = out_wrt,
                       .in_wrt = in_wrt,
                       .sensitivity = sensitivity};
  return impl_->call(req).outputs.at(0);
}

Vector RemoteModel::apply_jacobian(int out_wrt, int in_wrt, const ParameterBlock& parameters,
                                   const Vector& vec, const Config& config) {
  OperationRequest req{.model_name = impl_->name,
                       .operation = Operation::ApplyJacobian,
                       .parameters = parameters,
                       .config = config,
                       .out_wrt = out_wrt,
                       .in_wrt = in_wrt,
                       .vec = vec};
  return impl_->call(req).outputs.at(0);
}

Vector RemoteModel::apply_hessian(int out_wrt, int in_wrt1, int in_wrt2,
                                  const ParameterBlock& parameters, const Vector& sensitivity,
                                  const Vector& vec, const Config& config) {
  OperationRequest req{.model_name = impl_->name,
                       .operation = Operation::ApplyHessian,
                       .parameters = parameters,
                       .config = config,
                       .out_wrt = out_wrt,
                       .in_wrt = in_wrt1,
                       .in_wrt2 = in_wrt2,
                       .sensitivity = sensitivity,
                       .vec = vec};
  return impl_->call(req).outputs.at(0);
}

RemoteModel connect(const std::string& url, const std::string& name,
                    const ClientOptions& options) {
  auto impl = std::make_unique<RemoteModel::Impl>();
  impl->url = url;
  impl->name = name;
  impl->options = options;

  auto client = impl->checkout();

  auto info = client->Get("/Info");
  if (!info) throw_unavailable(url, info);
  if (info->status != 200) throw_from_response(*info);
  auto info_body = nlohmann::json::parse(info->body, nullptr, false);
  if (info_body.is_discarded() || !info_body.contains("models") ||
      !info_body["models"].is_array())
    throw BridgeError({ErrorKind::MalformedRequest, "malformed /Info response"});
  bool found = false;
  for (const auto& entry : info_body["models"])
    found = found || (entry.is_string() && entry.get<std::string>() == name);
  if (!found)
    throw BridgeError({ErrorKind::UnknownModel,
                       "server at " + url + " exposes no model named '" + name + "'"});

  const std::string named = nlohmann::json{{"name", name}, {"config", Config::object()}}.dump();
  const auto fetch = [&](const char* path) {
    auto res = client->Post(path, named, "application/json");
    if (!res) throw_unavailable(url, res);
    if (res->status != 200) throw_from_response(*res);
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
      throw BridgeError({ErrorKind::MalformedRequest, std::string("malformed ") + path + " response"});
    return body;
  };

  auto in_sizes = fetch("/InputSizes");
  auto out_sizes = fetch("/OutputSizes");
  auto model_info = fetch("/ModelInfo");

  ModelDescriptor desc;
  desc.name = name;
  try {
    desc.input_sizes = in_sizes.at("inputSizes").get<std::vector<int>>();
    desc.output_sizes = out_sizes.at("outputSizes").get<std::vector<int>>();
    const auto& support = model_info.at("support");
    desc.supports.evaluate = support.value("Evaluate", false);
    desc.supports.gradient = support.value("Gradient", false);
    desc.supports.apply_jacobian = support.value("ApplyJacobian", false);
    desc.supports.apply_hessian = support.value("ApplyHessian", false);
  } catch (const nlohmann::json::exception& e) {
    throw BridgeError({ErrorKind::MalformedRequest,
                       std::string("malformed model metadata: ") + e.what()});
  }
  if (!desc.valid())
    throw BridgeError({ErrorKind::MalformedRequest,
                       "server reported an invalid descriptor for '" + name + "'"});
  impl->descriptor = std::move(desc);
  impl->checkin(std::move(client));
  return RemoteModel(std::move(impl));
}

}  // namespace bridge
