#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bridge::uq {

using LogDensity = std::function<double(const std::vector<double>&)>;

struct ChainResult {
  /// States in order, including the start point.
  std::vector<std::vector<double>> samples;
  /// Log-density of each sample at the chain's top level.
  std::vector<double> log_densities;
  /// Accepted / proposed transitions, coarsest level first.
  std::vector<double> acceptance_rate;
  /// Density evaluations per level, coarsest level first.
  std::vector<std::uint64_t> evaluations_per_level;
  /// Set when the chain aborted on a non-finite density mid-run.
  std::optional<std::string> error;
};

/// Random-walk Metropolis: proposals theta' = theta + sigma * z with
/// independent standard normal z per component, accepted with probability
/// min(1, pi(theta')/pi(theta)). Returns n states including theta0.
/// Draws come from stream (seed, chain 0, level 0), which makes a
/// single-level MLDA run over the same seed reproduce the trace exactly.
ChainResult rwm(const LogDensity& log_post, const std::vector<double>& theta0,
                const std::vector<double>& proposal_sigma, std::size_t n, std::uint64_t seed);

/// Model hierarchy for multilevel delayed acceptance, coarsest level first.
struct MldaHierarchy {
  std::vector<LogDensity> levels;
  /// subsampling[l] = steps of level l forming one proposal for level l+1;
  /// length levels.size() - 1.
  std::vector<int> subsampling;
  /// Step size of the coarsest-level random walk, per component.
  std::vector<double> proposal_sigma;
};

/// Multilevel delayed acceptance: level 0 moves by random walk; each level
/// l >= 1 proposes the end state of a subsampling[l-1]-step run of the
/// level-(l-1) sampler and accepts with probability
///   min(1, [pi_l(theta') pi_{l-1}(theta)] / [pi_l(theta) pi_{l-1}(theta')]).
/// Each chain produces n_fine top-level transitions (n_fine + 1 samples) and
/// draws its level-l randomness from stream (seed, chain, l). Chains run
/// independently on up to `parallelism` threads.
std::vector<ChainResult> mlda(const MldaHierarchy& hierarchy, const std::vector<double>& theta0,
                              std::size_t n_fine, std::size_t chains, std::uint64_t seed,
                              int parallelism = 1);

}  // namespace bridge::uq
