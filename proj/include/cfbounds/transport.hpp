#pragma once

#include <span>
#include <vector>

namespace cfb::transport {

// min sum c_ij x_ij  s.t.  row sums = supply, column sums = demand, x >= 0,
// and x_ij = 0 where allowed_ij == 0. Supplies and demands must be positive
// and have (nearly) equal totals; demands are rescaled to match exactly.
//
// Disallowed cells are priced lexicographically above every allowed cell,
// so the solver also answers feasibility: blocked_mass > 0 at the optimum
// means no plan avoids the disallowed cells.
struct Solution {
  std::vector<double> plan;  // row-major m x n
  double blocked_mass = 0.0;
  int iterations = 0;
};

Solution solve(std::span<const double> supply, std::span<const double> demand,
               std::span<const unsigned char> allowed, std::span<const double> cost);

}  // namespace cfb::transport
