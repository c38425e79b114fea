#include "bridge/mcmc.hpp"

#include "bridge/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <stdexcept>
#include <thread>

namespace bridge::uq {

namespace {

double standard_normal(std::mt19937_64& rng) {
  static const boost::math::normal_distribution<> unit;
  return boost::math::quantile(unit, uniform_open(rng));
}

/// Accept/reject with the convention that a non-negative log-ratio accepts
/// without consuming a uniform. Keeps identical-level delayed acceptance
/// (log-ratio exactly 0) from disturbing any stream.
bool metropolis_accept(double log_ratio, std::mt19937_64& rng) {
  if (log_ratio >= 0) return true;
  return std::log(uniform_open(rng)) < log_ratio;
}

struct ChainAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One MLDA chain. Level 0 is a plain random walk; higher levels propose
/// coarse sub-chain end states. For the current state, the log-density at
/// every level is cached so a sub-chain restart costs no extra evaluation.
class MldaChain {
 public:
  MldaChain(const MldaHierarchy& hierarchy, std::vector<double> theta0, std::uint64_t seed,
            std::uint64_t chain_index)
      : hierarchy_(hierarchy),
        state_(std::move(theta0)),
        cached_log_density_(hierarchy.levels.size()),
        evaluations_(hierarchy.levels.size(), 0),
        accepted_(hierarchy.levels.size(), 0),
        proposed_(hierarchy.levels.size(), 0) {
    streams_.reserve(hierarchy_.levels.size());
    for (std::size_t level = 0; level < hierarchy_.levels.size(); ++level)
      streams_.push_back(make_stream(seed, chain_index, level));
    for (std::size_t level = 0; level < hierarchy_.levels.size(); ++level)
      cached_log_density_[level] = eval(level, state_);
  }

  const std::vector<double>& state() const { return state_; }
  double top_log_density() const { return cached_log_density_.back(); }
  const std::vector<std::uint64_t>& evaluations() const { return evaluations_; }

  std::vector<double> acceptance_rates() const {
    std::vector<double> rates(accepted_.size());
    for (std::size_t l = 0; l < rates.size(); ++l)
      rates[l] = proposed_[l] ? static_cast<double>(accepted_[l]) / proposed_[l] : 1.0;
    return rates;
  }

  /// Advances the top level by one transition.
  void step() { advance(hierarchy_.levels.size() - 1, state_, cached_log_density_); }

 private:
  double eval(std::size_t level, const std::vector<double>& theta) {
    ++evaluations_[level];
    const double value = hierarchy_.levels[level](theta);
    if (std::isnan(value) || value == std::numeric_limits<double>::infinity())
      throw ChainAborted("non-finite log-density at level " + std::to_string(level));
    return value;
  }

  /// One transition of the level sampler. `theta` and `cache[0..level]` are
  /// the current state and its per-level log-densities; both are updated in
  /// place on acceptance.
  void advance(std::size_t level, std::vector<double>& theta, std::vector<double>& cache) {
    ++proposed_[level];
    if (level == 0) {
      std::vector<double> proposal(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i)
        proposal[i] = theta[i] + hierarchy_.proposal_sigma[i] * standard_normal(streams_[0]);
      const double lp = eval(0, proposal);
      if (metropolis_accept(lp - cache[0], streams_[0])) {
        ++accepted_[0];
        theta = std::move(proposal);
        cache[0] = lp;
      }
      return;
    }

    // Sub-chain at level-1 starts from the current state; its densities are
    // already cached, so only its own proposals cost evaluations.
    std::vector<double> sub_theta = theta;
    std::vector<double> sub_cache = cache;
    for (int k = 0; k < hierarchy_.subsampling[level - 1]; ++k)
      advance(level - 1, sub_theta, sub_cache);

    const double lp_proposal = eval(level, sub_theta);
    const double log_ratio =
        (lp_proposal - cache[level]) - (sub_cache[level - 1] - cache[level - 1]);
    if (metropolis_accept(log_ratio, streams_[level])) {
      ++accepted_[level];
      theta = std::move(sub_theta);
      for (std::size_t l = 0; l < level; ++l) cache[l] = sub_cache[l];
      cache[level] = lp_proposal;
    }
  }

  const MldaHierarchy& hierarchy_;
  std::vector<double> state_;
  std::vector<double> cached_log_density_;
  std::vector<std::mt19937_64> streams_;
  std::vector<std::uint64_t> evaluations_;
  std::vector<std::uint64_t> accepted_;
  std::vector<std::uint64_t> proposed_;
};

ChainResult run_chain(const MldaHierarchy& hierarchy, const std::vector<double>& theta0,
                      std::size_t transitions, std::uint64_t seed, std::uint64_t chain_index) {
  ChainResult result;
  try {
    MldaChain chain(hierarchy, theta0, seed, chain_index);
    result.samples.push_back(chain.state());
    result.log_densities.push_back(chain.top_log_density());
    for (std::size_t t = 0; t < transitions; ++t) {
      chain.step();
      result.samples.push_back(chain.state());
      result.log_densities.push_back(chain.top_log_density());
    }
    result.acceptance_rate = chain.acceptance_rates();
    result.evaluations_per_level = chain.evaluations();
  } catch (const ChainAborted& e) {
    result.error = e.what();
  }
  return result;
}

}  // namespace

ChainResult rwm(const LogDensity& log_post, const std::vector<double>& theta0,
                const std::vector<double>& proposal_sigma, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("rwm: chain length must be >= 1");
  if (proposal_sigma.size() != theta0.size())
    throw std::invalid_argument("rwm: proposal_sigma dimension mismatch");
  const double lp0 = log_post(theta0);
  if (!std::isfinite(lp0)) throw std::invalid_argument("rwm: log_post not finite at theta0");

  MldaHierarchy single{{log_post}, {}, proposal_sigma};
  return run_chain(single, theta0, n - 1, seed, 0);
}

std::vector<ChainResult> mlda(const MldaHierarchy& hierarchy, const std::vector<double>& theta0,
                              std::size_t n_fine, std::size_t chains, std::uint64_t seed,
                              int parallelism) {
  if (hierarchy.levels.empty()) throw std::invalid_argument("mlda: hierarchy has no levels");
  if (hierarchy.subsampling.size() + 1 != hierarchy.levels.size())
    throw std::invalid_argument("mlda: need one subsampling rate per level transition");
  for (int rate : hierarchy.subsampling)
    if (rate < 1) throw std::invalid_argument("mlda: subsampling rates must be >= 1");
  if (hierarchy.proposal_sigma.size() != theta0.size())
    throw std::invalid_argument("mlda: proposal_sigma dimension mismatch");
  if (chains == 0) throw std::invalid_argument("mlda: chains must be >= 1");
  if (parallelism < 1) throw std::invalid_argument("mlda: parallelism must be >= 1");

  std::vector<ChainResult> results(chains);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chains) return;
      results[c] = run_chain(hierarchy, theta0, n_fine, seed, c);
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), chains);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace bridge::uq
