#include "bridge/balancer.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace bridge {

namespace {

constexpr time_t kBackendReadTimeoutSec = 7 * 24 * 3600;
constexpr int kProbeTimeoutSec = 2;
constexpr int kProbeFailureThreshold = 2;

const double kLatencyBucketsMs[] = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000};

std::unique_ptr<httplib::Client> make_backend_client(const std::string& url) {
  auto client = std::make_unique<httplib::Client>(url);
  client->set_connection_timeout(5, 0);
  client->set_read_timeout(kBackendReadTimeoutSec, 0);
  client->set_keep_alive(true);
  client->set_tcp_nodelay(true);
  return client;
}

void send_error(httplib::Response& res, const ProtocolError& err) {
  res.status = http_status(err.kind);
  res.set_content(encode_error(err), "application/json");
}

struct Backend {
  std::string url;
  // Exclusive evaluation connection; guarded by the in_flight flag, so only
  // the dispatching thread touches it.
  std::unique_ptr<httplib::Client> client;
  bool healthy = true;
  bool in_flight = false;
  int probe_failures = 0;
  std::uint64_t dispatched = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed = 0;
  std::uint64_t idle_since = 0;  // dispatch-sequence stamp, for longest-idle pick
};

}  // namespace

nlohmann::json BalancerStats::to_json() const {
  nlohmann::json j;
  auto list = nlohmann::json::array();
  for (const auto& b : backends) {
    list.push_back({{"url", b.url},
                    {"healthy", b.healthy},
                    {"inFlight", b.in_flight},
                    {"dispatched", b.dispatched},
                    {"completed", b.completed},
                    {"failed", b.failed}});
  }
  j["backends"] = list;
  j["accepted"] = accepted;
  j["dispatched"] = dispatched;
  j["finished"] = finished;
  j["queueLength"] = queue_length;
  nlohmann::json buckets = nlohmann::json::array();
  for (std::size_t i = 0; i < latency.counts.size(); ++i) {
    nlohmann::json bucket;
    if (i < latency.upper_bounds_ms.size()) bucket["leMs"] = latency.upper_bounds_ms[i];
    bucket["count"] = latency.counts[i];
    buckets.push_back(bucket);
  }
  j["latency"] = {{"buckets", buckets}, {"count", latency.total}, {"sumMs", latency.sum_ms}};
  return j;
}

struct LoadBalancer::Impl {
  BalancerConfig config;
  httplib::Server server;
  std::thread listen_thread;
  std::thread prober;
  int port = 0;

  mutable std::mutex mutex;
  std::condition_variable cv;
  std::vector<Backend> backends;
  bool closed = false;
  std::uint64_t next_ticket = 0;
  std::uint64_t serving = 0;        // next ticket allowed to dispatch
  std::uint64_t dispatch_seq = 0;   // stamps idle_since
  std::uint64_t total_dispatched = 0;
  std::uint64_t total_finished = 0;
  LatencyHistogram latency;

  Impl() {
    latency.upper_bounds_ms.assign(std::begin(kLatencyBucketsMs), std::end(kLatencyBucketsMs));
    latency.counts.assign(latency.upper_bounds_ms.size() + 1, 0);
  }

  ~Impl() { shutdown(); }

  // ---------------------------------------------------------- dispatch core

  Backend* pick_idle_backend_locked() {
    Backend* best = nullptr;
    for (auto& b : backends) {
      if (!b.healthy || b.in_flight) continue;
      if (!best || b.idle_since < best->idle_since) best = &b;
    }
    return best;
  }

  /// FIFO admission: returns the chosen backend, or nullptr if the balancer
  /// shut down or the queue is full. Marks the backend in flight.
  Backend* acquire_backend() {
    std::unique_lock lock(mutex);
    if (closed) return nullptr;
    if (next_ticket - serving >= config.queue_capacity) return nullptr;
    const std::uint64_t ticket = next_ticket++;
    Backend* picked = nullptr;
    cv.wait(lock, [&] {
      if (closed) return true;
      if (ticket != serving) return false;
      picked = pick_idle_backend_locked();
      return picked != nullptr;
    });
    if (closed || !picked) {
      // Withdrawn while queued; let the next ticket through.
      if (ticket == serving) ++serving;
      cv.notify_all();
      return nullptr;
    }
    picked->in_flight = true;
    ++picked->dispatched;
    ++total_dispatched;
    ++serving;
    cv.notify_all();
    return picked;
  }

  void release_backend(Backend* backend, bool success, bool still_healthy) {
    std::lock_guard lock(mutex);
    backend->in_flight = false;
    backend->idle_since = ++dispatch_seq;
    if (success)
      ++backend->completed;
    else
      ++backend->failed;
    if (!still_healthy) {
      backend->healthy = false;
      backend->probe_failures = kProbeFailureThreshold;
    }
    cv.notify_all();
  }

  void record_finished(std::chrono::steady_clock::time_point start) {
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    std::lock_guard lock(mutex);
    ++total_finished;
    latency.sum_ms += ms;
    ++latency.total;
    std::size_t bucket = latency.upper_bounds_ms.size();
    for (std::size_t i = 0; i < latency.upper_bounds_ms.size(); ++i) {
      if (ms <= latency.upper_bounds_ms[i]) {
        bucket = i;
        break;
      }
    }
    ++latency.counts[bucket];
  }

  /// Relays one evaluation request, retrying transport failures on other
  /// backends. The ticket taken by each attempt keeps arrival order.
  void handle_evaluation(const std::string& path, const httplib::Request& req,
                         httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    int max_attempts = config.max_retries_per_request > 0
                           ? config.max_retries_per_request
                           : static_cast<int>(backends.size());
    if (!config.retry_on_failure) max_attempts = 1;

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      Backend* backend = acquire_backend();
      if (!backend) break;
      auto result = backend->client->Post(path, req.body, "application/json");
      if (!result) {
        // Transport failure: the backend is gone until a probe revives it.
        release_backend(backend, false, false);
        continue;
      }
      release_backend(backend, result->status == 200, true);
      res.status = result->status;
      res.set_content(result->body, "application/json");
      record_finished(start);
      return;
    }
    send_error(res, {ErrorKind::Unavailable, "no backend available"});
    record_finished(start);
  }

  // ------------------------------------------------------------- metadata

  std::vector<std::string> healthy_urls() const {
    std::lock_guard lock(mutex);
    std::vector<std::string> urls;
    for (const auto& b : backends)
      if (b.healthy) urls.push_back(b.url);
    return urls;
  }

  /// Proxies a metadata request to the first healthy backend.
  void proxy_metadata(const httplib::Request& req, httplib::Response& res, bool get,
                      const std::string& path) {
    for (const auto& url : healthy_urls()) {
      auto client = make_backend_client(url);
      client->set_read_timeout(kProbeTimeoutSec, 0);
      auto result = get ? client->Get(path) : client->Post(path, req.body, "application/json");
      if (!result) continue;
      res.status = result->status;
      res.set_content(result->body, "application/json");
      return;
    }
    send_error(res, {ErrorKind::Unavailable, "no healthy backend"});
  }

  // --------------------------------------------------------------- probing

  void probe_once() {
    for (std::size_t i = 0; i < backends.size(); ++i) {
      std::string url;
      {
        std::lock_guard lock(mutex);
        url = backends[i].url;
      }
      auto client = make_backend_client(url);
      client->set_read_timeout(kProbeTimeoutSec, 0);
      client->set_connection_timeout(kProbeTimeoutSec, 0);
      auto result = client->Get("/Info");
      const bool up = result && result->status == 200;
      std::lock_guard lock(mutex);
      auto& b = backends[i];
      if (up) {
        b.probe_failures = 0;
        if (!b.healthy) {
          b.healthy = true;
          cv.notify_all();
        }
      } else if (++b.probe_failures >= kProbeFailureThreshold) {
        b.healthy = false;
      }
    }
  }

  void prober_loop() {
    std::unique_lock lock(mutex);
    while (!closed) {
      if (cv.wait_for(lock, config.health_interval, [&] { return closed; })) return;
      lock.unlock();
      probe_once();
      lock.lock();
    }
  }

  void mark_health(const std::string& url, bool healthy) {
    std::lock_guard lock(mutex);
    for (auto& b : backends) {
      if (b.url != url) continue;
      b.healthy = healthy;
      b.probe_failures = healthy ? 0 : kProbeFailureThreshold;
    }
    cv.notify_all();
  }

  BalancerStats snapshot() const {
    std::lock_guard lock(mutex);
    BalancerStats stats;
    for (const auto& b : backends) {
      stats.backends.push_back({b.url, b.healthy, b.in_flight ? 1 : 0, b.dispatched, b.completed,
                                b.failed});
    }
    stats.accepted = next_ticket;
    stats.dispatched = total_dispatched;
    stats.finished = total_finished;
    stats.queue_length = static_cast<std::size_t>(next_ticket - serving);
    stats.latency = latency;
    return stats;
  }

  // ------------------------------------------------------------- lifecycle

  void install_routes() {
    server.Get("/Info", [this](const httplib::Request& req, httplib::Response& res) {
      proxy_metadata(req, res, true, "/Info");
    });
    for (const char* path : {"/InputSizes", "/OutputSizes", "/ModelInfo"}) {
      server.Post(path, [this, path](const httplib::Request& req, httplib::Response& res) {
        proxy_metadata(req, res, false, path);
      });
    }
    for (auto op : {Operation::Evaluate, Operation::Gradient, Operation::ApplyJacobian,
                    Operation::ApplyHessian}) {
      const std::string path = operation_path(op);
      server.Post(path, [this, path](const httplib::Request& req, httplib::Response& res) {
        handle_evaluation(path, req, res);
      });
    }
    server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 200;
      res.set_content(snapshot().to_json().dump(), "application/json");
    });
  }

  void shutdown() {
    {
      std::lock_guard lock(mutex);
      if (closed) return;
      closed = true;
    }
    cv.notify_all();
    if (prober.joinable()) prober.join();
    server.stop();
    if (listen_thread.joinable()) listen_thread.join();
  }

  void wait() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return closed; });
  }
};

LoadBalancer::LoadBalancer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
LoadBalancer::LoadBalancer(LoadBalancer&&) noexcept = default;
LoadBalancer& LoadBalancer::operator=(LoadBalancer&&) noexcept = default;

LoadBalancer::~LoadBalancer() {
  if (impl_) impl_->shutdown();
}

int LoadBalancer::port() const { return impl_->port; }
BalancerStats LoadBalancer::stats() const { return impl_->snapshot(); }

void LoadBalancer::mark_health(const std::string& backend_url, bool healthy) {
  impl_->mark_health(backend_url, healthy);
}

void LoadBalancer::shutdown() {
  if (impl_) impl_->shutdown();
}

void LoadBalancer::wait() {
  if (impl_) impl_->wait();
}

namespace {

/// Collects the metadata documents a backend reports, for the startup
/// consistency check.
std::optional<nlohmann::json> fetch_metadata(const std::string& url) {
  auto client = make_backend_client(url);
  client->set_read_timeout(kProbeTimeoutSec, 0);
  client->set_connection_timeout(kProbeTimeoutSec, 0);
  auto info = client->Get("/Info");
  if (!info || info->status != 200) return std::nullopt;
  auto info_body = nlohmann::json::parse(info->body, nullptr, false);
  if (info_body.is_discarded() || !info_body.contains("models")) return std::nullopt;

  nlohmann::json meta;
  meta["info"] = info_body;
  for (const auto& name : info_body["models"]) {
    if (!name.is_string()) return std::nullopt;
    const std::string body = nlohmann::json{{"name", name}, {"config", Config::object()}}.dump();
    for (const char* path : {"/InputSizes", "/OutputSizes", "/ModelInfo"}) {
      auto res = client->Post(path, body, "application/json");
      if (!res || res->status != 200) return std::nullopt;
      meta[path][name.get<std::string>()] = nlohmann::json::parse(res->body, nullptr, false);
    }
  }
  return meta;
}

}  // namespace

LoadBalancer run_balancer(const BalancerConfig& config) {
  if (config.backend_urls.empty()) throw std::runtime_error("run_balancer: no backends given");
  std::set<std::string> unique(config.backend_urls.begin(), config.backend_urls.end());
  if (unique.size() != config.backend_urls.size())
    throw std::runtime_error("run_balancer: duplicate backend URLs");

  auto impl = std::make_unique<LoadBalancer::Impl>();
  impl->config = config;

  std::optional<nlohmann::json> reference;
  for (const auto& url : config.backend_urls) {
    Backend backend;
    backend.url = url;
    backend.client = make_backend_client(url);
    auto meta = fetch_metadata(url);
    if (!meta) {
      // Not reachable yet; probes will bring it in.
      backend.healthy = false;
      backend.probe_failures = kProbeFailureThreshold;
    } else if (config.check_consistency) {
      if (!reference) {
        reference = *meta;
      } else if (*reference != *meta) {
        throw std::runtime_error("run_balancer: backend " + url +
                                 " reports different model metadata than " +
                                 config.backend_urls.front());
      }
    }
    impl->backends.push_back(std::move(backend));
  }

  const int threads =
      config.handler_threads > 0
          ? config.handler_threads
          : std::max<int>(64, 4 * static_cast<int>(config.backend_urls.size()));
  impl->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  impl->server.set_keep_alive_max_count(100000);
  impl->server.set_tcp_nodelay(true);
  impl->server.set_read_timeout(3600, 0);

  impl->install_routes();

  if (config.listen_port == 0) {
    impl->port = impl->server.bind_to_any_port("0.0.0.0");
    if (impl->port <= 0) throw std::runtime_error("run_balancer: failed to bind a port");
  } else {
    if (!impl->server.bind_to_port("0.0.0.0", config.listen_port))
      throw std::runtime_error("run_balancer: failed to bind port " +
                               std::to_string(config.listen_port));
    impl->port = config.listen_port;
  }

  auto* raw = impl.get();
  impl->listen_thread = std::thread([raw] { raw->server.listen_after_bind(); });
  raw->server.wait_until_ready();
  impl->prober = std::thread([raw] { raw->prober_loop(); });
  return LoadBalancer(std::move(impl));
}

}  // namespace bridge
