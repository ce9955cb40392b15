#include "cfbounds/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <string>

#include "cfbounds/errors.hpp"
#include "cfbounds/transport.hpp"

namespace cfb {

namespace {

constexpr double kMassTol = 1e-12;

std::string describe(const BlockSpec& b) {
  return std::string(to_string(b.kind)) + " block (" + std::to_string(b.left) + "," +
         std::to_string(b.right) + ")";
}

}  // namespace

const char* to_string(BlockKind k) {
  return k == BlockKind::emission ? "emission" : "transition";
}

ParentPair make_pair(BlockKind kind, int a, int b) {
  return a < b ? ParentPair{kind, a, b} : ParentPair{kind, b, a};
}

std::vector<ParentPair> needed_pairs(const ModelPrimitives& m, const Trajectory& traj,
                                     const PosteriorSampleSet& samples) {
  const std::size_t H = m.H(), O = m.O(), T = samples.T;
  // reach[h1][t][h]: counterfactual state h possible at t when starting from h1.
  std::vector<std::vector<unsigned char>> reach(H);
  for (std::size_t b = 0; b < samples.B; ++b) {
    const int h1 = samples.h(b, 0);
    if (!reach[h1].empty()) continue;
    auto& R = reach[h1];
    R.assign(T * H, 0);
    R[h1] = 1;
    for (std::size_t t = 0; t + 1 < T; ++t)
      for (std::size_t h = 0; h < H; ++h) {
        if (!R[t * H + h]) continue;
        for (std::size_t i = 0; i < O; ++i) {
          if (m.e(h, traj.x_tilde[t], i) <= 0.0) continue;
          for (std::size_t h2 = 0; h2 < H; ++h2)
            if (m.q(h, i, h2) > 0.0) R[(t + 1) * H + h2] = 1;
        }
      }
  }

  std::set<ParentPair> out;
  std::set<std::vector<int>> seen;
  for (std::size_t b = 0; b < samples.B; ++b) {
    std::vector<int> path(samples.paths.begin() + b * T, samples.paths.begin() + (b + 1) * T);
    if (!seen.insert(path).second) continue;
    const auto& R = reach[path[0]];
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const int le = emission_parent(m, path[t], traj.x[t]);
      const int lq = transition_parent(m, path[t], traj.o[t]);
      for (std::size_t h = 0; h < H; ++h) {
        if (!R[t * H + h]) continue;
        const int ke = emission_parent(m, static_cast<int>(h), traj.x_tilde[t]);
        if (ke != le) out.insert(make_pair(BlockKind::emission, ke, le));
        for (std::size_t i = 0; i < O; ++i) {
          if (m.e(h, traj.x_tilde[t], i) <= 0.0) continue;
          const int kq = transition_parent(m, static_cast<int>(h), static_cast<int>(i));
          if (kq != lq) out.insert(make_pair(BlockKind::transition, kq, lq));
        }
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<ParentPair> all_supported_pairs(const ModelPrimitives& m) {
  std::vector<ParentPair> out;
  const int ne = static_cast<int>(m.H() * m.X());
  for (int k = 0; k < ne; ++k)
    for (int l = k + 1; l < ne; ++l) out.push_back({BlockKind::emission, k, l});
  std::vector<int> sup;
  for (std::size_t h = 0; h < m.H(); ++h)
    for (std::size_t i = 0; i < m.O(); ++i)
      if (m.supported(h, i)) sup.push_back(transition_parent(m, h, i));
  for (std::size_t a = 0; a < sup.size(); ++a)
    for (std::size_t b = a + 1; b < sup.size(); ++b)
      out.push_back({BlockKind::transition, sup[a], sup[b]});
  return out;
}

std::vector<BlockSpec> enumerate_blocks(const ModelPrimitives& m,
                                        const std::vector<ParentPair>& pairs) {
  const int X = static_cast<int>(m.X()), O = static_cast<int>(m.O());
  auto margin = [&](BlockKind kind, int parent) -> std::vector<double> {
    if (kind == BlockKind::emission) {
      if (parent < 0 || parent >= static_cast<int>(m.H()) * X)
        throw StructuralError("emission parent index " + std::to_string(parent) +
                              " out of range");
      const auto row = m.emission_row(parent / X, parent % X);
      return {row.begin(), row.end()};
    }
    if (parent < 0 || parent >= static_cast<int>(m.H()) * O)
      throw StructuralError("transition parent index " + std::to_string(parent) +
                            " out of range");
    const int h = parent / O, i = parent % O;
    if (!m.supported(h, i))
      throw StructuralError("transition parent (h=" + std::to_string(h + 1) +
                            ", i=" + std::to_string(i + 1) + ") is not supported");
    const auto row = m.transition_row(h, i);
    return {row.begin(), row.end()};
  };
  std::vector<BlockSpec> out;
  std::set<ParentPair> done;
  for (const auto& p0 : pairs) {
    if (p0.left == p0.right) continue;
    const ParentPair p = make_pair(p0.kind, p0.left, p0.right);
    if (!done.insert(p).second) continue;
    BlockSpec b;
    b.kind = p.kind;
    b.left = p.left;
    b.right = p.right;
    b.row_marginal = margin(p.kind, p.left);
    b.col_marginal = margin(p.kind, p.right);
    b.forbidden.assign(b.rows() * b.cols(), 0);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<unsigned char> cs_forbidden_cells(const BlockSpec& block) {
  const auto& L = block.row_marginal;
  const auto& R = block.col_marginal;
  std::vector<unsigned char> f(block.rows() * block.cols(), 0);
  for (std::size_t a = 0; a < block.rows(); ++a)
    for (std::size_t c = 0; c < block.cols(); ++c) {
      if (a == c) continue;
      const double lhs = L[c] * R[a], rhs = L[a] * R[c];
      if (lhs == 0.0 && rhs == 0.0) continue;
      if (lhs >= rhs) f[a * block.cols() + c] = 1;
    }
  return f;
}

void add_cs_constraints(std::vector<BlockSpec>& blocks) {
  for (auto& b : blocks) {
    const auto f = cs_forbidden_cells(b);
    for (std::size_t k = 0; k < f.size(); ++k) b.forbidden[k] |= f[k];
  }
}

std::size_t add_transition_zeros(std::vector<BlockSpec>& blocks, const ModelPrimitives& m,
                                 const std::vector<TransitionZero>& zeros) {
  std::vector<ParentPair> keys;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    keys.push_back({blocks[b].kind, blocks[b].left, blocks[b].right});
  std::size_t applied = 0;
  for (const auto& z : zeros) {
    const int f = transition_parent(m, z.h, z.i), c = transition_parent(m, z.h_cf, z.i_cf);
    if (f == c) continue;
    const ParentPair key = make_pair(BlockKind::transition, c, f);
    const auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) continue;
    BlockSpec& b = blocks[it - keys.begin()];
    const bool cf_is_left = c < f;
    const int r = cf_is_left ? z.h_next_cf : z.h_next;
    const int col = cf_is_left ? z.h_next : z.h_next_cf;
    b.forbidden[r * b.cols() + col] = 1;
    ++applied;
  }
  return applied;
}

CouplingSpace::CouplingSpace(std::vector<BlockSpec> blocks) : blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    auto& n = parents_[static_cast<int>(b.kind)];
    n = std::max(n, static_cast<std::size_t>(std::max(b.left, b.right) + 1));
  }
  for (int k = 0; k < 2; ++k) lookup_[k].assign(parents_[k] * parents_[k], -1);
  offset_.push_back(0);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const BlockSpec& b = blocks_[bi];
    if (b.left >= b.right) throw StructuralError("blocks must be stored with left < right");
    if (b.forbidden.size() != b.rows() * b.cols())
      throw StructuralError("forbidden mask of " + describe(b) + " has the wrong size");
    const std::size_t P = parents_[static_cast<int>(b.kind)];
    lookup_[static_cast<int>(b.kind)][b.left * P + b.right] = static_cast<std::int32_t>(bi);

    std::vector<std::int32_t> idx(b.rows() * b.cols(), -1);
    Compact cp;
    for (std::size_t r = 0; r < b.rows(); ++r)
      if (b.row_marginal[r] > 0.0) cp.rows.push_back(static_cast<int>(r));
    for (std::size_t c = 0; c < b.cols(); ++c)
      if (b.col_marginal[c] > 0.0) cp.cols.push_back(static_cast<int>(c));
    for (int r : cp.rows) cp.supply.push_back(b.row_marginal[r]);
    for (int c : cp.cols) cp.demand.push_back(b.col_marginal[c]);
    for (int r : cp.rows)
      for (int c : cp.cols) {
        const std::size_t k = r * b.cols() + c;
        if (b.forbidden[k]) {
          cp.allowed.push_back(0);
          cp.flat.push_back(-1);
        } else {
          idx[k] = static_cast<std::int32_t>(dim_++);
          cp.allowed.push_back(1);
          cp.flat.push_back(idx[k]);
        }
      }
    index_.push_back(std::move(idx));
    compact_.push_back(std::move(cp));
    offset_.push_back(dim_);
  }
}

CouplingSpace::Ref CouplingSpace::find(BlockKind kind, int k, int l) const {
  const int kd = static_cast<int>(kind);
  const auto P = static_cast<int>(parents_[kd]);
  const bool tr = k > l;
  const int a = tr ? l : k, c = tr ? k : l;
  if (a < 0 || c >= P) return {};
  return {lookup_[kd][a * P + c], tr};
}

std::size_t CouplingSpace::block_of(std::size_t flat) const {
  return static_cast<std::size_t>(std::upper_bound(offset_.begin(), offset_.end(), flat) -
                                  offset_.begin()) -
         1;
}

PairwiseCoupling independence_coupling(std::shared_ptr<const CouplingSpace> space) {
  PairwiseCoupling out{space, std::vector<double>(space->dim(), 0.0)};
  for (std::size_t bi = 0; bi < space->num_blocks(); ++bi) {
    const BlockSpec& b = space->block(bi);
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c) {
        const double v = b.row_marginal[r] * b.col_marginal[c];
        const auto k = space->cell(bi, r, c);
        if (k >= 0)
          out.z[k] = v;
        else if (v > 0.0)
          throw InfeasibleCoupling(static_cast<std::ptrdiff_t>(bi),
                                   "product coupling violates zero constraints in " +
                                       describe(b));
      }
  }
  return out;
}

PairwiseCoupling comonotonic_coupling(std::shared_ptr<const CouplingSpace> space,
                                      const RankOrdering& ranks) {
  PairwiseCoupling out{space, std::vector<double>(space->dim(), 0.0)};
  std::vector<double> lo_r, hi_r, lo_c, hi_c;
  auto intervals = [](const std::vector<double>& margin, const std::vector<int>& order,
                      std::vector<double>& lo, std::vector<double>& hi) {
    lo.assign(margin.size(), 0.0);
    hi.assign(margin.size(), 0.0);
    double acc = 0.0;
    for (int v : order) {
      lo[v] = acc;
      acc += margin[v];
      hi[v] = acc;
    }
  };
  for (std::size_t bi = 0; bi < space->num_blocks(); ++bi) {
    const BlockSpec& b = space->block(bi);
    const auto& order =
        b.kind == BlockKind::emission ? ranks.emission_order() : ranks.state_order();
    if (order.size() != b.rows() || order.size() != b.cols())
      throw InputError("ranking does not match the size of " + describe(b));
    intervals(b.row_marginal, order, lo_r, hi_r);
    intervals(b.col_marginal, order, lo_c, hi_c);
    for (std::size_t r = 0; r < b.rows(); ++r) {
      if (b.row_marginal[r] <= 0.0) continue;
      for (std::size_t c = 0; c < b.cols(); ++c) {
        if (b.col_marginal[c] <= 0.0) continue;
        const double v = std::min(hi_r[r], hi_c[c]) - std::max(lo_r[r], lo_c[c]);
        if (v <= 0.0) continue;
        const auto k = space->cell(bi, r, c);
        if (k >= 0)
          out.z[k] = v;
        else if (v > kMassTol)
          throw InfeasibleCoupling(static_cast<std::ptrdiff_t>(bi),
                                   "comonotonic coupling violates zero constraints in " +
                                       describe(b));
      }
    }
  }
  return out;
}

void solve_block(const CouplingSpace& space, std::size_t bi, std::span<const double> cost,
                 std::span<double> out) {
  const auto& cp = space.compact(bi);
  const std::size_t m = cp.rows.size(), n = cp.cols.size();
  if (m == 1 || n == 1) {
    // A single row or column admits only the product plan.
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t c = 0; c < n; ++c) {
        const double v = cp.supply[a] * cp.demand[c];
        const auto k = cp.flat[a * n + c];
        if (k >= 0)
          out[k] = v;
        else if (v > kMassTol)
          throw InfeasibleCoupling(static_cast<std::ptrdiff_t>(bi),
                                   "zero constraints leave no feasible plan in " +
                                       describe(space.block(bi)));
      }
    return;
  }
  std::vector<double> c(m * n, 0.0);
  for (std::size_t k = 0; k < m * n; ++k)
    if (cp.flat[k] >= 0) c[k] = cost[cp.flat[k]];
  const auto sol = transport::solve(cp.supply, cp.demand, cp.allowed, c);
  if (sol.blocked_mass > kMassTol)
    throw InfeasibleCoupling(static_cast<std::ptrdiff_t>(bi),
                             "zero constraints leave no feasible plan in " +
                                 describe(space.block(bi)));
  for (std::size_t k = 0; k < m * n; ++k)
    if (cp.flat[k] >= 0) out[cp.flat[k]] = sol.plan[k];
}

PairwiseCoupling phase1_feasible_point(std::shared_ptr<const CouplingSpace> space) {
  PairwiseCoupling out{space, std::vector<double>(space->dim(), 0.0)};
  const std::vector<double> zero(space->dim(), 0.0);
  for (std::size_t bi = 0; bi < space->num_blocks(); ++bi) {
    const auto& cp = space->compact(bi);
    const bool free = std::all_of(cp.allowed.begin(), cp.allowed.end(),
                                  [](unsigned char a) { return a != 0; });
    if (free) {
      for (std::size_t a = 0; a < cp.rows.size(); ++a)
        for (std::size_t c = 0; c < cp.cols.size(); ++c)
          out.z[cp.flat[a * cp.cols.size() + c]] = cp.supply[a] * cp.demand[c];
    } else {
      solve_block(*space, bi, zero, out.z);
    }
  }
  return out;
}

FeasibilityReport check_feasibility(const PairwiseCoupling& pc) {
  const CouplingSpace& s = *pc.space;
  FeasibilityReport rep;
  auto note = [&](double v, std::size_t bi) {
    if (v > rep.max_residual) {
      rep.max_residual = v;
      rep.worst_block = static_cast<std::ptrdiff_t>(bi);
    }
  };
  for (std::size_t bi = 0; bi < s.num_blocks(); ++bi) {
    const BlockSpec& b = s.block(bi);
    std::vector<double> rs(b.rows(), 0.0), cs(b.cols(), 0.0);
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c) {
        const double v = pc.value(bi, r, c);
        note(-v, bi);
        rs[r] += v;
        cs[c] += v;
      }
    for (std::size_t r = 0; r < b.rows(); ++r) note(std::abs(rs[r] - b.row_marginal[r]), bi);
    for (std::size_t c = 0; c < b.cols(); ++c) note(std::abs(cs[c] - b.col_marginal[c]), bi);
  }
  return rep;
}

PairwiseCoupling transfer(const PairwiseCoupling& src, std::shared_ptr<const CouplingSpace> dst) {
  PairwiseCoupling out{dst, std::vector<double>(dst->dim(), 0.0)};
  std::vector<double> cost(dst->dim(), 0.0);
  for (std::size_t bi = 0; bi < dst->num_blocks(); ++bi) {
    const BlockSpec& b = dst->block(bi);
    const auto ref = src.space->find(b.kind, b.left, b.right);
    if (ref.block < 0) {
      solve_block(*dst, bi, cost, out.z);
      continue;
    }
    double lost = 0.0;
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c) {
        const double v = src.value(ref.block, r, c);
        const auto k = dst->cell(bi, r, c);
        if (k >= 0) {
          out.z[k] = v;
          cost[k] = -v;
        } else {
          lost += v;
        }
      }
    if (lost > kMassTol) solve_block(*dst, bi, cost, out.z);
  }
  return out;
}

void write_coupling_csv(std::ostream& os, const PairwiseCoupling& pc, const ModelPrimitives& m) {
  const CouplingSpace& s = *pc.space;
  auto label = [&](BlockKind kind, int parent) {
    const int w = static_cast<int>(kind == BlockKind::emission ? m.X() : m.O());
    return std::to_string(parent / w + 1) + ":" + std::to_string(parent % w + 1);
  };
  os << "kind,k,l,row,col,value\n";
  const auto prec = os.precision(17);
  for (std::size_t bi = 0; bi < s.num_blocks(); ++bi) {
    const BlockSpec& b = s.block(bi);
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c) {
        const auto k = s.cell(bi, r, c);
        if (k < 0) continue;
        os << to_string(b.kind) << ',' << label(b.kind, b.left) << ','
           << label(b.kind, b.right) << ',' << r + 1 << ',' << c + 1 << ',' << pc.z[k] << '\n';
      }
  }
  os.precision(prec);
}

}  // namespace cfb
