#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "cfbounds/inference.hpp"
#include "cfbounds/model.hpp"
#include "cfbounds/ranks.hpp"

namespace cfb {

enum class BlockKind : int { emission = 0, transition = 1 };

const char* to_string(BlockKind k);

// Parent indices: emission parent (h,x) -> h*X + x, transition parent
// (h,i) -> h*O + i.
inline int emission_parent(const ModelPrimitives& m, int h, int x) {
  return h * static_cast<int>(m.X()) + x;
}
inline int transition_parent(const ModelPrimitives& m, int h, int i) {
  return h * static_cast<int>(m.O()) + i;
}

// Unordered parent pair, stored with left < right.
struct ParentPair {
  BlockKind kind;
  int left;
  int right;
  auto operator<=>(const ParentPair&) const = default;
};

ParentPair make_pair(BlockKind kind, int a, int b);

// Joint distribution of the outcomes of two parents: rows follow the left
// parent, columns the right parent.
struct BlockSpec {
  BlockKind kind = BlockKind::emission;
  int left = 0, right = 0;
  std::vector<double> row_marginal, col_marginal;
  std::vector<unsigned char> forbidden;  // rows x cols

  std::size_t rows() const { return row_marginal.size(); }
  std::size_t cols() const { return col_marginal.size(); }
};

// Transition-cell zero: factual (h,i) -> h_next together with
// counterfactual (h_cf,i_cf) -> h_next_cf has probability zero.
struct TransitionZero {
  int h, i, h_next, h_cf, i_cf, h_next_cf;
};

// Pairs referenced by the objective for these samples: the factual parent
// of each period against every counterfactual parent reachable from h_1(b)
// under x_tilde.
std::vector<ParentPair> needed_pairs(const ModelPrimitives& m, const Trajectory& traj,
                                     const PosteriorSampleSet& samples);
std::vector<ParentPair> all_supported_pairs(const ModelPrimitives& m);

// Self pairs are dropped. Throws StructuralError on an unsupported parent.
std::vector<BlockSpec> enumerate_blocks(const ModelPrimitives& m,
                                        const std::vector<ParentPair>& pairs);

// Counterfactual-stability zeros: cell (a,c), a != c, is forbidden when
// left[c] * right[a] >= left[a] * right[c], unless both sides vanish.
std::vector<unsigned char> cs_forbidden_cells(const BlockSpec& block);
void add_cs_constraints(std::vector<BlockSpec>& blocks);

// Returns the number of zeros that landed on an existing block.
std::size_t add_transition_zeros(std::vector<BlockSpec>& blocks, const ModelPrimitives& m,
                                 const std::vector<TransitionZero>& zeros);

// Flat variable layout over all blocks. A cell is a variable when both
// margins are positive and it is not forbidden.
class CouplingSpace {
 public:
  struct Ref {
    int block = -1;
    bool transposed = false;
  };
  // Compact transportation problem over the active rows/columns of a block.
  struct Compact {
    std::vector<int> rows, cols;
    std::vector<double> supply, demand;
    std::vector<unsigned char> allowed;
    std::vector<std::int32_t> flat;  // compact cell -> flat index, -1 if forbidden
  };

  explicit CouplingSpace(std::vector<BlockSpec> blocks);

  std::size_t dim() const { return dim_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const BlockSpec& block(std::size_t b) const { return blocks_[b]; }
  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  const Compact& compact(std::size_t b) const { return compact_[b]; }
  std::size_t offset(std::size_t b) const { return offset_[b]; }
  std::size_t size(std::size_t b) const { return offset_[b + 1] - offset_[b]; }

  std::int32_t cell(std::size_t b, std::size_t r, std::size_t c) const {
    return index_[b][r * blocks_[b].cols() + c];
  }
  // Block holding parents (k, l), k != l. transposed means k is the right parent.
  Ref find(BlockKind kind, int k, int l) const;
  // Flat index of the cell (outcome of k, outcome of l), -1 if not a variable.
  std::int32_t cell(Ref ref, int outcome_k, int outcome_l) const {
    return ref.transposed ? cell(ref.block, outcome_l, outcome_k)
                          : cell(ref.block, outcome_k, outcome_l);
  }
  std::size_t block_of(std::size_t flat) const;

 private:
  std::vector<BlockSpec> blocks_;
  std::vector<std::vector<std::int32_t>> index_;
  std::vector<Compact> compact_;
  std::vector<std::size_t> offset_;
  std::size_t dim_ = 0;
  std::size_t parents_[2] = {0, 0};
  std::vector<std::int32_t> lookup_[2];  // [k * parents + l] -> block
};

struct PairwiseCoupling {
  std::shared_ptr<const CouplingSpace> space;
  std::vector<double> z;

  double value(std::size_t b, std::size_t r, std::size_t c) const {
    const auto k = space->cell(b, r, c);
    return k < 0 ? 0.0 : z[k];
  }
};

PairwiseCoupling independence_coupling(std::shared_ptr<const CouplingSpace> space);
// Emission blocks follow the emission order, transition blocks the state order.
PairwiseCoupling comonotonic_coupling(std::shared_ptr<const CouplingSpace> space,
                                      const RankOrdering& ranks);
PairwiseCoupling phase1_feasible_point(std::shared_ptr<const CouplingSpace> space);

struct FeasibilityReport {
  double max_residual = 0.0;
  std::ptrdiff_t worst_block = -1;
};
// Max of margin residuals and negativity. Forbidden cells carry no
// variables, so their mass is zero by construction.
FeasibilityReport check_feasibility(const PairwiseCoupling& z);

// Optimal vertex of block b for a linear cost given per flat index; the
// block's cells of out are overwritten. Throws InfeasibleCoupling.
void solve_block(const CouplingSpace& space, std::size_t b, std::span<const double> cost,
                 std::span<double> out);

// Moves a coupling onto another space with the same parent pairs (e.g. after
// adding zeros). Blocks that would lose mass are replaced by the closest
// vertex under a linear overlap score.
PairwiseCoupling transfer(const PairwiseCoupling& src, std::shared_ptr<const CouplingSpace> dst);

// Columns kind,k,l,row,col,value; parents written as "h:x" or "h:i", 1-based.
void write_coupling_csv(std::ostream& os, const PairwiseCoupling& z, const ModelPrimitives& m);

}  // namespace cfb
