#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cfbounds/model.hpp"

namespace cfb {

// Forward/backward messages in log space, indexed [t][h] with t 0-based.
// The policy factors P(x_t) are treated as atoms and left out: they are
// common multipliers that cancel in every normalised quantity.
struct MessageSet {
  std::size_t T = 0, H = 0;
  std::vector<double> log_alpha;  // empty until forward_filter
  std::vector<double> log_beta;   // empty until backward_smooth
  double log_likelihood = 0.0;

  double la(std::size_t t, std::size_t h) const { return log_alpha[t * H + h]; }
  double lb(std::size_t t, std::size_t h) const { return log_beta[t * H + h]; }
};

MessageSet forward_filter(const ModelPrimitives& m, const Trajectory& traj);
MessageSet backward_smooth(const ModelPrimitives& m, const Trajectory& traj);
MessageSet forward_backward(const ModelPrimitives& m, const Trajectory& traj);

struct SmoothedMarginals {
  std::size_t T = 0, H = 0;
  std::vector<double> unary;     // [t][h]
  std::vector<double> pairwise;  // [t][h][h'] for t < T-1

  double at(std::size_t t, std::size_t h) const { return unary[t * H + h]; }
  double pair(std::size_t t, std::size_t h, std::size_t h2) const {
    return pairwise[(t * H + h) * H + h2];
  }
};

SmoothedMarginals smoothed_marginals(const ModelPrimitives& m, const Trajectory& traj,
                                     const MessageSet& messages);

struct PosteriorSampleSet {
  std::size_t B = 0, T = 0;
  std::uint64_t seed = 0;
  std::vector<int> paths;  // [b][t]

  int h(std::size_t b, std::size_t t) const { return paths[b * T + t]; }
  bool operator==(const PosteriorSampleSet&) const = default;
};

// Sample b uses its own substream, so the result does not depend on the
// number of threads.
PosteriorSampleSet sample_posterior_paths(const ModelPrimitives& m, const Trajectory& traj,
                                          std::size_t B, std::uint64_t seed);

// Columns b,t,h (1-based).
void write_samples_csv(std::ostream& os, const PosteriorSampleSet& s);

}  // namespace cfb
