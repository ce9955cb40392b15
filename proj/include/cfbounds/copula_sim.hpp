#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfbounds/inference.hpp"
#include "cfbounds/model.hpp"
#include "cfbounds/ranks.hpp"

namespace cfb {

// Counterfactual paths; path n = b * replicates + r replays posterior
// sample b with the r-th independent set of noise draws.
struct CounterfactualPathSet {
  std::string copula;
  std::size_t samples = 0, replicates = 1, T = 0;
  std::vector<int> h_tilde;  // [n][t]
  std::vector<int> o_tilde;  // [n][t]

  std::size_t size() const { return samples * replicates; }
  int h(std::size_t n, std::size_t t) const { return h_tilde[n * T + t]; }
  int o(std::size_t n, std::size_t t) const { return o_tilde[n * T + t]; }
};

CounterfactualPathSet simulate_independence(const ModelPrimitives& m, const Trajectory& traj,
                                            const PosteriorSampleSet& samples,
                                            std::uint64_t seed, std::size_t replicates = 1);

CounterfactualPathSet simulate_comonotonic(const ModelPrimitives& m, const Trajectory& traj,
                                           const PosteriorSampleSet& samples,
                                           const RankOrdering& ranks, std::uint64_t seed,
                                           std::size_t replicates = 1);

struct PnEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

PnEstimate estimate_pn_mc(const CounterfactualPathSet& cf, int forbidden_state);

// Fresh paths from p under x_tilde, ignoring the observations.
PnEstimate estimate_pn_naive(const ModelPrimitives& m, const std::vector<int>& x_tilde,
                             std::size_t R, std::uint64_t seed, int forbidden_state);

// Columns copula,b,t,h_tilde,o_tilde (1-based); b counts replicated paths.
void write_paths_csv(std::ostream& os, const CounterfactualPathSet& cf);

}  // namespace cfb
