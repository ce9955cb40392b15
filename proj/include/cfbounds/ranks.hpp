#pragma once

#include <utility>
#include <vector>

#include "cfbounds/model.hpp"

namespace cfb {

// Orders of states and emissions (best first) with the CDFs of every row
// accumulated along that order. Outcome i of a row owns the half-open
// interval [cdf before i, cdf through i).
class RankOrdering {
 public:
  RankOrdering() = default;
  // Orders are 0-based permutations; throws InputError otherwise.
  RankOrdering(const ModelPrimitives& m, std::vector<int> state_order,
               std::vector<int> emission_order);
  static RankOrdering identity(const ModelPrimitives& m);

  const std::vector<int>& state_order() const { return state_order_; }
  const std::vector<int>& emission_order() const { return emission_order_; }
  int state_rank(int h) const { return state_rank_[h]; }
  int emission_rank(int i) const { return emission_rank_[i]; }

  std::pair<double, double> emission_interval(int h, int x, int i) const;
  std::pair<double, double> transition_interval(int h, int i, int h2) const;

  // Inverse transforms; u in [0,1).
  int emission_inverse(int h, int x, double u) const;
  int transition_inverse(int h, int i, double u) const;

  // Cumulative value after the outcome ranked r (r = -1 gives 0).
  double emission_cdf(int h, int x, int r) const;
  double transition_cdf(int h, int i, int r) const;

 private:
  std::size_t H_ = 0, O_ = 0, X_ = 0;
  std::vector<int> state_order_, emission_order_, state_rank_, emission_rank_;
  std::vector<double> Ehat_;  // [h][x][r], value after rank r
  std::vector<double> Qhat_;  // [h][i][r]
  std::vector<double> E_, Q_;
};

}  // namespace cfb
