#include "bridge/model.hpp"

#include <atomic>
#include <thread>

namespace bridge {

namespace {

[[noreturn]] void throw_unsupported(const Model& model, Operation op) {
  throw BridgeError({ErrorKind::UnsupportedOperation,
                     std::string(operation_name(op)) + " not supported by '" +
                         model.descriptor().name + "'"});
}

}  // namespace

Vector Model::gradient(int, int, const ParameterBlock&, const Vector&, const Config&) {
  throw_unsupported(*this, Operation::Gradient);
}

Vector Model::apply_jacobian(int, int, const ParameterBlock&, const Vector&, const Config&) {
  throw_unsupported(*this, Operation::ApplyJacobian);
}

Vector Model::apply_hessian(int, int, int, const ParameterBlock&, const Vector&, const Vector&,
                            const Config&) {
  throw_unsupported(*this, Operation::ApplyHessian);
}

std::vector<BatchItem> evaluate_batch(Model& model, const std::vector<ParameterBlock>& batch,
                                      const Config& config, int parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");

  std::vector<BatchItem> results(batch.size(),
                                 BatchItem(ProtocolError{ErrorKind::Unavailable, "not evaluated"}));
  if (batch.empty()) return results;

  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= batch.size()) return;
      try {
        results[i] = BatchItem(model.evaluate(batch[i], config));
      } catch (const BridgeError& e) {
        results[i] = BatchItem(e.error());
      } catch (const std::exception& e) {
        results[i] = BatchItem(ProtocolError{ErrorKind::ModelFailure, e.what()});
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), batch.size());
  if (workers == 1) {
    run();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace bridge
