#include "bridge/server.hpp"

#include <httplib.h>

#include <condition_variable>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace bridge {

namespace {

/// Counting admission gate with strict FIFO order: tickets are admitted in
/// the order they were drawn, at most `capacity` holders at a time.
class FifoGate {
 public:
  explicit FifoGate(int capacity) : capacity_(static_cast<std::uint64_t>(capacity)) {}

  /// Blocks until admitted; returns false if the gate closed while waiting.
  bool acquire() {
    std::unique_lock lock(mutex_);
    if (closed_) return false;
    const std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return closed_ || ticket < released_ + capacity_; });
    return !closed_;
  }

  void release() {
    std::lock_guard lock(mutex_);
    ++released_;
    cv_.notify_all();
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t capacity_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t released_ = 0;
  bool closed_ = false;
};

struct Registered {
  std::shared_ptr<Model> model;
  ModelDescriptor descriptor;
  std::unique_ptr<FifoGate> gate;
};

void send_error(httplib::Response& res, const ProtocolError& err) {
  res.status = http_status(err.kind);
  res.set_content(encode_error(err), "application/json");
}

void send_json(httplib::Response& res, const std::string& body) {
  res.status = 200;
  res.set_content(body, "application/json");
}

}  // namespace

struct ModelServer::Impl {
  httplib::Server server;
  std::thread listen_thread;
  int port = 0;
  std::map<std::string, Registered> models;
  std::mutex state_mutex;
  std::condition_variable stopped_cv;
  bool stopping = false;
  bool stopped = false;

  ~Impl() { shutdown(); }

  void shutdown() {
    {
      std::lock_guard lock(state_mutex);
      if (stopping) {
        return;
      }
      stopping = true;
    }
    for (auto& [name, reg] : models) reg.gate->close();
    server.stop();
    if (listen_thread.joinable()) listen_thread.join();
    {
      std::lock_guard lock(state_mutex);
      stopped = true;
    }
    stopped_cv.notify_all();
  }

  void wait() {
    std::unique_lock lock(state_mutex);
    stopped_cv.wait(lock, [&] { return stopped; });
  }

  Registered* find(const std::string& name) {
    auto it = models.find(name);
    return it == models.end() ? nullptr : &it->second;
  }

  // Parses {"name":...} style metadata bodies.
  Expected<std::pair<std::string, Config>> parse_named(const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("name") || !j["name"].is_string())
      return ProtocolError{ErrorKind::MalformedRequest, "missing string field 'name'"};
    Config config = Config::object();
    if (j.contains("config")) {
      if (!j["config"].is_object())
        return ProtocolError{ErrorKind::MalformedRequest, "'config' must be a JSON object"};
      config = j["config"];
    }
    return std::make_pair(j["name"].get<std::string>(), std::move(config));
  }

  void handle_operation(Operation op, const httplib::Request& req, httplib::Response& res) {
    auto decoded = decode_request(req.body, op);
    if (!decoded) return send_error(res, decoded.error());
    const OperationRequest& request = decoded.value();

    Registered* reg = find(request.model_name);
    if (!reg)
      return send_error(res, {ErrorKind::UnknownModel,
                              "no model named '" + request.model_name + "'"});
    if (auto err = validate_against(request, reg->descriptor)) return send_error(res, *err);

    if (!reg->gate->acquire())
      return send_error(res, {ErrorKind::Unavailable, "server is shutting down"});
    struct Release {
      FifoGate* gate;
      ~Release() { gate->release(); }
    } release{reg->gate.get()};

    OperationResponse response;
    try {
      switch (op) {
        case Operation::Evaluate:
          response.outputs = reg->model->evaluate(request.parameters, request.config);
          break;
        case Operation::Gradient:
          response.outputs = {reg->model->gradient(*request.out_wrt, *request.in_wrt,
                                                   request.parameters, request.sensitivity,
                                                   request.config)};
          break;
        case Operation::ApplyJacobian:
          response.outputs = {reg->model->apply_jacobian(*request.out_wrt, *request.in_wrt,
                                                         request.parameters, request.vec,
                                                         request.config)};
          break;
        case Operation::ApplyHessian:
          response.outputs = {reg->model->apply_hessian(*request.out_wrt, *request.in_wrt,
                                                        *request.in_wrt2, request.parameters,
                                                        request.sensitivity, request.vec,
                                                        request.config)};
          break;
      }
    } catch (const BridgeError& e) {
      return send_error(res, e.error());
    } catch (const std::exception& e) {
      return send_error(res, {ErrorKind::ModelFailure, e.what()});
    }

    if (auto err = validate_response(response, request, reg->descriptor))
      return send_error(res, *err);
    send_json(res, encode_response(response));
  }

  void install_routes() {
    server.Get("/Info", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json body;
      body["protocolVersion"] = kProtocolVersion;
      auto names = nlohmann::json::array();
      for (const auto& [name, reg] : models) names.push_back(name);
      body["models"] = names;
      send_json(res, body.dump());
    });

    server.Post("/InputSizes", [this](const httplib::Request& req, httplib::Response& res) {
      auto named = parse_named(req.body);
      if (!named) return send_error(res, named.error());
      Registered* reg = find(named.value().first);
      if (!reg)
        return send_error(res, {ErrorKind::UnknownModel,
                                "no model named '" + named.value().first + "'"});
      send_json(res, nlohmann::json{{"inputSizes", reg->descriptor.input_sizes}}.dump());
    });

    server.Post("/OutputSizes", [this](const httplib::Request& req, httplib::Response& res) {
      auto named = parse_named(req.body);
      if (!named) return send_error(res, named.error());
      Registered* reg = find(named.value().first);
      if (!reg)
        return send_error(res, {ErrorKind::UnknownModel,
                                "no model named '" + named.value().first + "'"});
      send_json(res, nlohmann::json{{"outputSizes", reg->descriptor.output_sizes}}.dump());
    });

    server.Post("/ModelInfo", [this](const httplib::Request& req, httplib::Response& res) {
      auto named = parse_named(req.body);
      if (!named) return send_error(res, named.error());
      Registered* reg = find(named.value().first);
      if (!reg)
        return send_error(res, {ErrorKind::UnknownModel,
                                "no model named '" + named.value().first + "'"});
      const auto& caps = reg->descriptor.supports;
      nlohmann::json body;
      body["support"] = {{"Evaluate", caps.evaluate},
                         {"Gradient", caps.gradient},
                         {"ApplyJacobian", caps.apply_jacobian},
                         {"ApplyHessian", caps.apply_hessian}};
      send_json(res, body.dump());
    });

    for (auto op : {Operation::Evaluate, Operation::Gradient, Operation::ApplyJacobian,
                    Operation::ApplyHessian}) {
      server.Post(operation_path(op), [this, op](const httplib::Request& req,
                                                 httplib::Response& res) {
        handle_operation(op, req, res);
      });
    }
  }
};

ModelServer::ModelServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ModelServer::ModelServer(ModelServer&&) noexcept = default;
ModelServer& ModelServer::operator=(ModelServer&&) noexcept = default;

ModelServer::~ModelServer() {
  if (impl_) impl_->shutdown();
}

int ModelServer::port() const { return impl_->port; }

void ModelServer::shutdown() {
  if (impl_) impl_->shutdown();
}

void ModelServer::wait() {
  if (impl_) impl_->wait();
}

ModelServer serve_models(std::vector<std::shared_ptr<Model>> models, const ServerConfig& config) {
  if (models.empty()) throw std::runtime_error("serve_models: no models given");
  if (config.max_concurrent_per_model < 1)
    throw std::runtime_error("serve_models: max_concurrent_per_model must be >= 1");

  auto impl = std::make_unique<ModelServer::Impl>();
  for (auto& model : models) {
    if (!model) throw std::runtime_error("serve_models: null model");
    auto desc = model->descriptor();
    if (!desc.valid())
      throw std::runtime_error("serve_models: invalid descriptor for model '" + desc.name + "'");
    if (impl->models.count(desc.name))
      throw std::runtime_error("serve_models: duplicate model name '" + desc.name + "'");
    impl->models.emplace(desc.name,
                         Registered{std::move(model), std::move(desc),
                                    std::make_unique<FifoGate>(config.max_concurrent_per_model)});
  }

  const int threads = config.handler_threads > 0
                          ? config.handler_threads
                          : std::max(32u, 4 * std::thread::hardware_concurrency());
  impl->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  impl->server.set_keep_alive_max_count(100000);
  impl->server.set_tcp_nodelay(true);
  impl->server.set_payload_max_length(config.max_body_bytes);
  // Long-running evaluations must not trip the read timeout.
  impl->server.set_read_timeout(3600, 0);

  impl->install_routes();

  if (config.port == 0) {
    impl->port = impl->server.bind_to_any_port("0.0.0.0");
    if (impl->port <= 0) throw std::runtime_error("serve_models: failed to bind a port");
  } else {
    if (!impl->server.bind_to_port("0.0.0.0", config.port))
      throw std::runtime_error("serve_models: failed to bind port " +
                               std::to_string(config.port));
    impl->port = config.port;
  }

  auto* raw = impl.get();
  impl->listen_thread = std::thread([raw] { raw->server.listen_after_bind(); });
  raw->server.wait_until_ready();
  return ModelServer(std::move(impl));
}

}  // namespace bridge
