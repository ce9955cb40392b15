#pragma once

#include <string>
#include <vector>

#include "cfbounds/coupling.hpp"
#include "cfbounds/model.hpp"
#include "cfbounds/ranks.hpp"
#include "cfbounds/scenario.hpp"

namespace cfb::cancer {

// States (1-based in files): 1 healthy, 2 undiagnosed in-situ,
// 3 undiagnosed invasive, 4 diagnosed in-situ, 5 diagnosed invasive,
// 6 recovered, 7 death. Emissions: 1 no screening, 2 negative, 3 positive
// with negative biopsy, 4 in-situ detected, 5 invasive detected,
// 6 recovered, 7 death. Action 0 = screening covered, 1 = denied.
inline constexpr int kDeath = 6;  // 0-based

struct Options {
  double in_situ_stay = 0.5;  // q24; q26 = 1 - q24
  std::vector<int> emission_order;  // 0-based; identity when empty
};

Scenario breast_cancer_model(const Options& opts = {});

// path1: o = (2,1,...,1,7), x = (0,1,...,1,0)
// path2: o = (2,1,...,1,5,7), x = (0,1,...,1,0,0)
// with x_tilde all 0. Values are 0-based in the returned trajectory.
Trajectory make_path(const std::string& label, std::size_t T);

std::vector<TransitionZero> pm_zero_list();

// State order (1,6,4,2,5,3,7); emission order identity unless given.
RankOrdering breast_cancer_ranks(const ModelPrimitives& m,
                                 std::vector<int> emission_order = {});

}  // namespace cfb::cancer
