#pragma once

#include "bridge/model.hpp"

#include <memory>
#include <vector>

namespace bridge {

struct ServerConfig {
  /// TCP port; 0 asks the OS for a free port (read it back via port()).
  int port = kDefaultPort;
  /// Evaluations of one model admitted concurrently; excess requests wait
  /// FIFO. Metadata endpoints are never gated.
  int max_concurrent_per_model = 1;
  /// Reject request bodies larger than this.
  std::size_t max_body_bytes = 64ull << 20;
  /// Connection handler threads; 0 picks a default. Must exceed the number
  /// of simultaneously waiting evaluation requests, since a queued request
  /// occupies its handler thread.
  int handler_threads = 0;
};

/// Running server handle. Destroying the handle shuts the server down.
class ModelServer {
 public:
  ModelServer(ModelServer&&) noexcept;
  ModelServer& operator=(ModelServer&&) noexcept;
  ~ModelServer();

  /// Bound TCP port.
  int port() const;

  /// Stops accepting work: in-flight evaluations still deliver their
  /// responses, queued ones are answered with Unavailable. Idempotent and
  /// callable from any thread.
  void shutdown();

  /// Blocks until shutdown() is called (used by the CLI).
  void wait();

 private:
  friend ModelServer serve_models(std::vector<std::shared_ptr<Model>>, const ServerConfig&);
  struct Impl;
  explicit ModelServer(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Binds synchronously (throws std::runtime_error if the port is taken or a
/// model is invalid) and serves the protocol endpoints until shutdown.
/// Model names must be pairwise distinct.
ModelServer serve_models(std::vector<std::shared_ptr<Model>> models,
                         const ServerConfig& config = {});

}  // namespace bridge
