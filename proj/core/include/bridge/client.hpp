#pragma once

#include "bridge/model.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace bridge {

struct ClientOptions {
  /// Per-call response timeout; zero means unlimited (model evaluations can
  /// legitimately run for hours).
  std::chrono::seconds timeout{0};
  /// Transport-level retries on Unavailable before giving up.
  int retries = 0;
};

/// Remote model proxy: looks like any other Model, speaks the HTTP protocol
/// underneath. The descriptor is fetched once at connect time. Concurrent
/// calls from many threads are fine; each in-flight call holds its own pooled
/// connection, so calls never serialize client-side.
class RemoteModel : public Model {
 public:
  ~RemoteModel() override;
  RemoteModel(RemoteModel&&) noexcept;
  RemoteModel& operator=(RemoteModel&&) noexcept;

  const std::string& url() const;
  const std::string& name() const;

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
  friend RemoteModel connect(const std::string&, const std::string&, const ClientOptions&);
  struct Impl;
  explicit RemoteModel(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Fetches /Info and the per-model metadata, returning a ready proxy.
/// Throws BridgeError: Unavailable if the server cannot be reached,
/// UnknownModel if the name is not in the server's model list.
RemoteModel connect(const std::string& url, const std::string& name,
                    const ClientOptions& options = {});

}  // namespace bridge
