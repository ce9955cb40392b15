#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cfb {

inline constexpr double kStochasticTol = 1e-9;

// Dynamic latent-state model. Indices are 0-based here; files are 1-based.
//   p[h]           initial state distribution
//   E[h][x][i]     P(O_t = i | H_t = h, X_t = x), stored flat
//   Q[h][i][h']    P(H_{t+1} = h' | H_t = h, O_t = i), stored flat
// transition_support[h*O + i] marks rows of Q that carry mass.
struct ModelPrimitives {
  std::size_t num_states = 0;
  std::size_t num_emissions = 0;
  std::size_t num_actions = 0;
  std::vector<double> p;
  std::vector<double> E;
  std::vector<double> Q;
  std::vector<unsigned char> transition_support;

  std::size_t H() const { return num_states; }
  std::size_t O() const { return num_emissions; }
  std::size_t X() const { return num_actions; }

  double e(std::size_t h, std::size_t x, std::size_t i) const {
    return E[(h * num_actions + x) * num_emissions + i];
  }
  double q(std::size_t h, std::size_t i, std::size_t h2) const {
    return Q[(h * num_emissions + i) * num_states + h2];
  }
  double& e(std::size_t h, std::size_t x, std::size_t i) {
    return E[(h * num_actions + x) * num_emissions + i];
  }
  double& q(std::size_t h, std::size_t i, std::size_t h2) {
    return Q[(h * num_emissions + i) * num_states + h2];
  }
  std::span<const double> emission_row(std::size_t h, std::size_t x) const {
    return {E.data() + (h * num_actions + x) * num_emissions, num_emissions};
  }
  std::span<const double> transition_row(std::size_t h, std::size_t i) const {
    return {Q.data() + (h * num_emissions + i) * num_states, num_states};
  }
  bool supported(std::size_t h, std::size_t i) const {
    return transition_support[h * num_emissions + i] != 0;
  }

  bool operator==(const ModelPrimitives&) const = default;
};

// Zero-initialised model of the given size.
ModelPrimitives make_model(std::size_t states, std::size_t emissions, std::size_t actions);

struct Violation {
  std::string field;                // "p", "E" or "Q"
  std::vector<std::size_t> index;   // 0-based coordinates of the row or entry
  double deviation = 0.0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

// Throws StructuralError on shape mismatch. Fills transition_support from
// the zero rows of Q and reports stochasticity/sign violations.
ValidationReport validate_primitives(ModelPrimitives& m);

struct Trajectory {
  std::vector<int> o;
  std::vector<int> x;
  std::vector<int> x_tilde;

  std::size_t T() const { return o.size(); }
  bool operator==(const Trajectory&) const = default;
};

// Range and length checks only; likelihood is checked by forward_filter.
void check_trajectory(const ModelPrimitives& m, const Trajectory& traj);

}  // namespace cfb
