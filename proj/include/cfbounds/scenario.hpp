#pragma once

#include <string>
#include <vector>

#include "cfbounds/coupling.hpp"
#include "cfbounds/model.hpp"
#include "cfbounds/ranks.hpp"

namespace cfb {

// Everything bound_pn needs beyond the trajectory.
struct Scenario {
  std::string name;
  ModelPrimitives model;
  int forbidden_state = 0;
  RankOrdering ranks;
  std::vector<TransitionZero> pm_zeros;
  std::vector<std::string> state_labels;
  std::vector<std::string> emission_labels;
};

}  // namespace cfb
