#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cfbounds/coupling.hpp"
#include "cfbounds/inference.hpp"
#include "cfbounds/model.hpp"

namespace cfb {

// PN(z) = 1 - (1/B) sum_b P(counterfactual H_T = forbidden | sample b, z).
//
// For each sample the counterfactual state distribution gamma_t is pushed
// forward one period at a time; the factor linking gamma_{t-1} to gamma_t
// only depends on (h_{t-1}, h_t, x_{t-1}, o_{t-1}, x~_{t-1}), so the factor
// tables are built once per distinct key and identical sample paths are
// collapsed into weighted unique paths.
class PnObjective {
 public:
  PnObjective(const ModelPrimitives& m, const Trajectory& traj,
              const PosteriorSampleSet& samples, std::shared_ptr<const CouplingSpace> space,
              int forbidden_state);

  std::size_t dim() const { return space_->dim(); }
  std::size_t horizon() const { return T_; }
  std::size_t unique_paths() const { return weights_.size(); }
  std::size_t patterns() const { return keys_.size(); }
  const std::shared_ptr<const CouplingSpace>& space() const { return space_; }

  // OpenMP over unique paths in fixed chunks, reduced in fixed order, so
  // results do not depend on the thread count.
  double value(std::span<const double> z) const;
  double value_and_gradient(std::span<const double> z, std::span<double> grad) const;

  // Single-threaded versions over the raw samples without memoisation.
  double value_serial(std::span<const double> z) const;
  double value_and_gradient_serial(std::span<const double> z, std::span<double> grad) const;

  // gamma[b][t][h] for every original sample.
  std::vector<double> forward_states(std::span<const double> z) const;

 private:
  struct Term {
    std::int32_t index;  // flat coordinate, -1 for a constant
    double coeff;        // value = z[index] * coeff, or coeff when index < 0
  };
  struct Pattern {
    std::vector<Term> A;  // [h~][o~]  emission ratio
    std::vector<Term> P;  // [h~][o~][h~']  transition ratio
  };
  struct Tables;

  void build_tables(std::span<const double> z, Tables& tb) const;
  double path_value(const Tables& tb, std::size_t u, double* gamma) const;
  void path_adjoint(const Tables& tb, std::size_t u, double weight, const double* gamma,
                    double* dA, double* dP) const;
  Term emission_term(int ht, int ot, int hp, int x, int o, int xt) const;
  Term transition_term(int ht, int ot, int ht2, int hp, int o, int hn) const;

  ModelPrimitives m_;
  Trajectory traj_;
  PosteriorSampleSet samples_;
  std::shared_ptr<const CouplingSpace> space_;
  int forbidden_;
  std::size_t T_, H_, O_;

  std::vector<std::vector<int>> keys_;     // distinct step keys
  std::vector<Pattern> patterns_;
  std::vector<int> unique_;                // [u][t] hidden path
  std::vector<double> weights_;            // multiplicity of unique path u
  std::vector<std::int32_t> steps_;        // [u][t] pattern of step t -> t+1
  std::vector<std::size_t> sample_to_unique_;
  std::vector<std::vector<unsigned char>> reach_;  // [h_1][t][h~]
};

double eval_pn(const ModelPrimitives& m, const PairwiseCoupling& z,
               const PosteriorSampleSet& samples, const Trajectory& traj, int forbidden_state);
std::vector<double> grad_pn(const ModelPrimitives& m, const PairwiseCoupling& z,
                            const PosteriorSampleSet& samples, const Trajectory& traj,
                            int forbidden_state);

// Explicit sum over every counterfactual (h~, o~) path; exponential in T,
// only for cross-checking. Throws std::invalid_argument beyond T = 6 or
// 10^7 paths per sample.
double eval_pn_expanded(const ModelPrimitives& m, const PairwiseCoupling& z,
                        const PosteriorSampleSet& samples, const Trajectory& traj,
                        int forbidden_state);

}  // namespace cfb
