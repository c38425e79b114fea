#pragma once

#include "bridge/protocol.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace bridge {

struct BalancerConfig {
  /// Listening port; 0 asks the OS for a free port.
  int listen_port = 0;
  std::vector<std::string> backend_urls;
  /// Re-dispatch a request whose backend failed at the transport level
  /// (evaluations are assumed deterministic, so replays are safe).
  bool retry_on_failure = true;
  /// Dispatch attempts per request; 0 defaults to the pool size.
  int max_retries_per_request = 0;
  std::chrono::milliseconds health_interval{5000};
  /// Pending evaluation requests beyond this are answered 503.
  std::size_t queue_capacity = 10000;
  /// Connection handler threads; also bounds how many requests can actually
  /// wait in the queue at once. 0 picks a default.
  int handler_threads = 0;
  /// Verify at startup that all reachable backends report identical model
  /// metadata; mismatched pools refuse to start.
  bool check_consistency = true;
};

struct BackendSnapshot {
  std::string url;
  bool healthy = false;
  int in_flight = 0;        // 0 or 1
  std::uint64_t dispatched = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed = 0;
};

struct LatencyHistogram {
  std::vector<double> upper_bounds_ms;  // last bucket is unbounded
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  double sum_ms = 0;
};

struct BalancerStats {
  std::vector<BackendSnapshot> backends;
  std::uint64_t accepted = 0;    // evaluation requests admitted to the queue
  std::uint64_t dispatched = 0;  // dispatch attempts handed to a backend
  std::uint64_t finished = 0;    // responses delivered to clients
  std::size_t queue_length = 0;  // accepted and not yet dispatched
  LatencyHistogram latency;

  nlohmann::json to_json() const;
};

/// Drop-in replacement for a single model server that fans evaluation
/// requests out over a pool of backends, never letting more than one
/// evaluation be in flight per backend. Metadata endpoints are proxied from
/// the first healthy backend; GET /stats exposes counters.
class LoadBalancer {
 public:
  LoadBalancer(LoadBalancer&&) noexcept;
  LoadBalancer& operator=(LoadBalancer&&) noexcept;
  ~LoadBalancer();

  int port() const;
  BalancerStats stats() const;

  /// Overrides a backend's health flag, as the periodic prober does.
  /// Backends are addressed by their configured URL.
  void mark_health(const std::string& backend_url, bool healthy);

  void shutdown();
  void wait();

 private:
  friend LoadBalancer run_balancer(const BalancerConfig&);
  struct Impl;
  explicit LoadBalancer(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Starts listening (throws std::runtime_error on bind failure, empty or
/// duplicated backend list, or inconsistent backend metadata). Backends that
/// are unreachable at startup join the pool once health probes see them.
LoadBalancer run_balancer(const BalancerConfig& config);

}  // namespace bridge
