#pragma once

#include <string>

#include "cfbounds/model.hpp"
#include "cfbounds/scenario.hpp"

namespace cfb {

// JSON model files. Fields: num_states, num_emissions, num_actions, p,
// E[h][x][i], Q[h][i][h']. Throws ParseError naming the offending field.
// With validate=true a failing ValidationReport is thrown as InputError;
// otherwise the caller runs validate_primitives itself.
ModelPrimitives parse_model_json(const std::string& text, bool validate = true);
ModelPrimitives load_model(const std::string& path, bool validate = true);
std::string model_to_json(const ModelPrimitives& m);
void save_model(const std::string& path, const ModelPrimitives& m);

// Fields T, o, x, x_tilde; all values 1-based.
Trajectory parse_trajectory_json(const std::string& text);
Trajectory load_trajectory(const std::string& path);
std::string trajectory_to_json(const Trajectory& tr);
void save_trajectory(const std::string& path, const Trajectory& tr);

// A model file plus optional forbidden_state (default: last state),
// rank_H and rank_O (1-based orders, default identity) and pm_zeros
// (list of 1-based [h, i, h', h~, i~, h~'] tuples).
Scenario load_scenario(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace cfb
