#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfbounds/coupling.hpp"
#include "cfbounds/inference.hpp"
#include "cfbounds/objective.hpp"
#include "cfbounds/scenario.hpp"

namespace cfb {

enum class Direction { minimize, maximize };
enum class StepRule { exact_line_search, backtracking };
enum class ConstraintMode { base, cs, pm, cs_pm };

const char* to_string(ConstraintMode mode);
ConstraintMode parse_mode(const std::string& s);  // base | cs | pm | cs+pm

struct SolveOptions {
  Direction direction = Direction::maximize;
  std::size_t restarts = 20;  // random starts on top of the copula starts
  std::size_t max_iters = 200;
  double fw_gap_tol = 1e-6;
  StepRule step_rule = StepRule::exact_line_search;
  bool away_steps = true;
  // Extra starts; moved onto the solve's space (and repaired) if needed.
  std::vector<PairwiseCoupling> mandatory_starts;
  std::uint64_t seed = 0;
};

// Objective with gradient along with the polynomial degree of its
// restriction to a segment, which sizes the line-search grid.
struct ObjectiveFns {
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>, std::span<double>)> value_and_gradient;
  std::size_t degree = 2;
};

ObjectiveFns objective_fns(const PnObjective& obj);

struct FwResult {
  std::vector<double> z;
  double value = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
  std::vector<double> history;  // objective value before each step and at the end
};

// Per-block transportation LP: extremises <gradient, s> over the polytope.
PairwiseCoupling lp_block_oracle(std::span<const double> gradient,
                                 std::shared_ptr<const CouplingSpace> space, Direction dir);

FwResult frank_wolfe_extremize(const CouplingSpace& space, std::vector<double> z0,
                               const ObjectiveFns& f, const SolveOptions& opts);

struct RestartTrace {
  std::string label;
  std::size_t iterations = 0;
  double fw_gap = 0.0;
  double start_value = 0.0;
  double value = 0.0;
};

struct BoundReport {
  double value = 0.0;
  PairwiseCoupling argument;
  std::vector<RestartTrace> trace;
  std::size_t best_restart = 0;
  double fw_gap = 0.0;
  double feasibility_residual = 0.0;
  double wall_ms = 0.0;
};

struct LabeledStart {
  std::string label;
  std::vector<double> z;
};

// Runs Frank-Wolfe from every start (in parallel) and keeps the best;
// ties go to the earliest start.
BoundReport extremize(const PnObjective& obj, const std::vector<LabeledStart>& starts,
                      const SolveOptions& opts);

std::shared_ptr<const CouplingSpace> build_space(const Scenario& sc, const Trajectory& traj,
                                                 const PosteriorSampleSet& samples,
                                                 ConstraintMode mode);

// Copula starts (independence or a phase-1 point, comonotonic when
// feasible), transferred extra starts, then opts.restarts random starts.
std::vector<LabeledStart> make_starts(const Scenario& sc,
                                      std::shared_ptr<const CouplingSpace> space,
                                      const SolveOptions& opts, std::uint64_t seed);

struct Bounds {
  BoundReport lb, ub;
  PosteriorSampleSet samples;
  std::shared_ptr<const CouplingSpace> space;
};

Bounds bound_pn(const Scenario& sc, const Trajectory& traj, std::size_t B, std::uint64_t seed,
                ConstraintMode mode, const SolveOptions& opts);

// base, then cs seeded with the base optima, then base again seeded with
// the cs optima, so that the reported bounds respect the inclusion order.
struct NestedBounds {
  Bounds base, cs;
};
NestedBounds nested_bounds(const Scenario& sc, const Trajectory& traj, std::size_t B,
                           std::uint64_t seed, const SolveOptions& opts);

}  // namespace cfb
