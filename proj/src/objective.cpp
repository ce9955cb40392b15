#include "cfbounds/objective.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "cfbounds/errors.hpp"

namespace cfb {

namespace {

constexpr std::size_t kChunks = 8;

std::vector<std::vector<unsigned char>> reach_sets(const ModelPrimitives& m,
                                                   const Trajectory& traj,
                                                   const PosteriorSampleSet& s) {
  const std::size_t H = m.H(), O = m.O(), T = s.T;
  std::vector<std::vector<unsigned char>> reach(H);
  for (std::size_t b = 0; b < s.B; ++b) {
    const int h1 = s.h(b, 0);
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
  return reach;
}

[[noreturn]] void missing_block(const char* kind, int k, int l) {
  throw StructuralError(std::string("coupling space has no ") + kind + " block for parents (" +
                        std::to_string(k) + "," + std::to_string(l) + ")");
}

}  // namespace

struct PnObjective::Tables {
  std::vector<double> A, P;
};

PnObjective::PnObjective(const ModelPrimitives& m, const Trajectory& traj,
                         const PosteriorSampleSet& samples,
                         std::shared_ptr<const CouplingSpace> space, int forbidden_state)
    : m_(m),
      traj_(traj),
      samples_(samples),
      space_(std::move(space)),
      forbidden_(forbidden_state),
      T_(samples.T),
      H_(m.H()),
      O_(m.O()) {
  if (samples.T != traj.T()) throw InputError("samples and trajectory differ in length");
  if (forbidden_state < 0 || static_cast<std::size_t>(forbidden_state) >= H_)
    throw InputError("forbidden state out of range");

  for (std::size_t b = 0; b < samples.B; ++b)
    for (std::size_t t = 0; t + 1 < T_; ++t) {
      const int hp = samples.h(b, t), hn = samples.h(b, t + 1);
      if (m.e(hp, traj.x[t], traj.o[t]) <= 0.0 || m.q(hp, traj.o[t], hn) <= 0.0)
        throw SampleInconsistent(b + 1, t + 1,
                                 "sample inconsistent with model at b=" +
                                     std::to_string(b + 1) + ", t=" + std::to_string(t + 1));
    }

  std::map<std::vector<int>, std::size_t> seen;
  for (std::size_t b = 0; b < samples.B; ++b) {
    std::vector<int> path(samples.paths.begin() + b * T_, samples.paths.begin() + (b + 1) * T_);
    auto [it, fresh] = seen.emplace(path, weights_.size());
    if (fresh) {
      unique_.insert(unique_.end(), path.begin(), path.end());
      weights_.push_back(0.0);
    }
    weights_[it->second] += 1.0;
    sample_to_unique_.push_back(it->second);
  }

  reach_ = reach_sets(m, traj, samples);
  const auto& reach = reach_;
  std::map<std::vector<int>, std::int32_t> key_index;
  std::vector<std::vector<unsigned char>> key_reach;
  const std::size_t U = weights_.size();
  steps_.assign(U * (T_ > 0 ? T_ - 1 : 0), -1);
  for (std::size_t u = 0; u < U; ++u) {
    const int* path = unique_.data() + u * T_;
    for (std::size_t t = 0; t + 1 < T_; ++t) {
      std::vector<int> key{path[t], path[t + 1], traj.x[t], traj.o[t], traj.x_tilde[t]};
      auto [it, fresh] = key_index.emplace(key, static_cast<std::int32_t>(keys_.size()));
      if (fresh) {
        keys_.push_back(key);
        key_reach.emplace_back(H_, 0);
      }
      steps_[u * (T_ - 1) + t] = it->second;
      const auto& R = reach[path[0]];
      for (std::size_t h = 0; h < H_; ++h) key_reach[it->second][h] |= R[t * H_ + h];
    }
  }

  patterns_.resize(keys_.size());
  for (std::size_t p = 0; p < keys_.size(); ++p) {
    const auto& k = keys_[p];
    const int hp = k[0], hn = k[1], x = k[2], o = k[3], xt = k[4];
    Pattern& pat = patterns_[p];
    pat.A.assign(H_ * O_, Term{-1, 0.0});
    pat.P.assign(H_ * O_ * H_, Term{-1, 0.0});
    for (std::size_t ht = 0; ht < H_; ++ht) {
      if (!key_reach[p][ht]) continue;
      for (std::size_t ot = 0; ot < O_; ++ot) {
        if (m.e(ht, xt, ot) <= 0.0) continue;
        pat.A[ht * O_ + ot] = emission_term(ht, ot, hp, x, o, xt);
        for (std::size_t h2 = 0; h2 < H_; ++h2)
          pat.P[(ht * O_ + ot) * H_ + h2] = transition_term(ht, ot, h2, hp, o, hn);
      }
    }
  }
}

PnObjective::Term PnObjective::emission_term(int ht, int ot, int hp, int x, int o,
                                             int xt) const {
  const double den = m_.e(hp, x, o);
  const int k = emission_parent(m_, ht, xt), l = emission_parent(m_, hp, x);
  if (k == l) return {-1, ot == o ? 1.0 : 0.0};
  const auto ref = space_->find(BlockKind::emission, k, l);
  if (ref.block < 0) missing_block("emission", k, l);
  const auto idx = space_->cell(ref, ot, o);
  return idx < 0 ? Term{-1, 0.0} : Term{idx, 1.0 / den};
}

PnObjective::Term PnObjective::transition_term(int ht, int ot, int ht2, int hp, int o,
                                               int hn) const {
  if (m_.q(ht, ot, ht2) <= 0.0) return {-1, 0.0};
  const double den = m_.q(hp, o, hn);
  const int k = transition_parent(m_, ht, ot), l = transition_parent(m_, hp, o);
  if (k == l) return {-1, ht2 == hn ? 1.0 : 0.0};
  const auto ref = space_->find(BlockKind::transition, k, l);
  if (ref.block < 0) missing_block("transition", k, l);
  const auto idx = space_->cell(ref, ht2, hn);
  return idx < 0 ? Term{-1, 0.0} : Term{idx, 1.0 / den};
}

void PnObjective::build_tables(std::span<const double> z, Tables& tb) const {
  const std::size_t na = H_ * O_, np = H_ * O_ * H_;
  tb.A.resize(patterns_.size() * na);
  tb.P.resize(patterns_.size() * np);
  auto val = [&](const Term& t) { return t.index < 0 ? t.coeff : z[t.index] * t.coeff; };
  for (std::size_t p = 0; p < patterns_.size(); ++p) {
    for (std::size_t k = 0; k < na; ++k) tb.A[p * na + k] = val(patterns_[p].A[k]);
    for (std::size_t k = 0; k < np; ++k) tb.P[p * np + k] = val(patterns_[p].P[k]);
  }
}

double PnObjective::path_value(const Tables& tb, std::size_t u, double* gamma) const {
  const std::size_t H = H_, O = O_;
  std::fill(gamma, gamma + T_ * H, 0.0);
  gamma[unique_[u * T_]] = 1.0;
  for (std::size_t t = 0; t + 1 < T_; ++t) {
    const std::size_t p = steps_[u * (T_ - 1) + t];
    const double* A = tb.A.data() + p * H * O;
    const double* P = tb.P.data() + p * H * O * H;
    const double* g = gamma + t * H;
    double* g2 = gamma + (t + 1) * H;
    for (std::size_t h = 0; h < H; ++h) {
      if (g[h] == 0.0) continue;
      for (std::size_t o = 0; o < O; ++o) {
        const double a = A[h * O + o];
        if (a == 0.0) continue;
        const double w = g[h] * a;
        const double* row = P + (h * O + o) * H;
        for (std::size_t h2 = 0; h2 < H; ++h2) g2[h2] += w * row[h2];
      }
    }
  }
  return gamma[(T_ - 1) * H + forbidden_];
}

void PnObjective::path_adjoint(const Tables& tb, std::size_t u, double weight,
                               const double* gamma, double* dA, double* dP) const {
  const std::size_t H = H_, O = O_;
  std::vector<double> lam(H, 0.0), prev(H);
  lam[forbidden_] = weight;
  for (std::size_t t = T_ - 1; t-- > 0;) {
    const std::size_t p = steps_[u * (T_ - 1) + t];
    const double* A = tb.A.data() + p * H * O;
    const double* P = tb.P.data() + p * H * O * H;
    double* dAp = dA + p * H * O;
    double* dPp = dP + p * H * O * H;
    const double* g = gamma + t * H;
    std::fill(prev.begin(), prev.end(), 0.0);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t o = 0; o < O; ++o) {
        const double a = A[h * O + o];
        if (a == 0.0 && g[h] == 0.0) continue;
        const double* row = P + (h * O + o) * H;
        double s = 0.0;
        for (std::size_t h2 = 0; h2 < H; ++h2) s += row[h2] * lam[h2];
        prev[h] += a * s;
        if (g[h] == 0.0) continue;
        dAp[h * O + o] += g[h] * s;
        if (a == 0.0) continue;
        const double ga = g[h] * a;
        double* drow = dPp + (h * O + o) * H;
        for (std::size_t h2 = 0; h2 < H; ++h2) drow[h2] += ga * lam[h2];
      }
    lam.swap(prev);
  }
}

double PnObjective::value(std::span<const double> z) const {
  Tables tb;
  build_tables(z, tb);
  const std::size_t U = weights_.size();
  const std::size_t nc = std::min(kChunks, U);
  std::vector<double> partial(nc, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(nc); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    std::vector<double> gamma(T_ * H_);
    double acc = 0.0;
    for (std::size_t u = c * U / nc; u < (c + 1) * U / nc; ++u)
      acc += weights_[u] * path_value(tb, u, gamma.data());
    partial[c] = acc;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return 1.0 - total / static_cast<double>(samples_.B);
}

double PnObjective::value_and_gradient(std::span<const double> z, std::span<double> grad) const {
  Tables tb;
  build_tables(z, tb);
  const std::size_t U = weights_.size();
  const std::size_t nc = std::min(kChunks, U);
  const std::size_t na = patterns_.size() * H_ * O_, np = patterns_.size() * H_ * O_ * H_;
  std::vector<double> partial(nc, 0.0);
  std::vector<double> dA(nc * na, 0.0), dP(nc * np, 0.0);
  const double invB = 1.0 / static_cast<double>(samples_.B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(nc); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    std::vector<double> gamma(T_ * H_);
    double acc = 0.0;
    for (std::size_t u = c * U / nc; u < (c + 1) * U / nc; ++u) {
      acc += weights_[u] * path_value(tb, u, gamma.data());
      path_adjoint(tb, u, -weights_[u] * invB, gamma.data(), dA.data() + c * na,
                   dP.data() + c * np);
    }
    partial[c] = acc;
  }
  for (std::size_t c = 1; c < nc; ++c) {
    for (std::size_t k = 0; k < na; ++k) dA[k] += dA[c * na + k];
    for (std::size_t k = 0; k < np; ++k) dP[k] += dP[c * np + k];
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t pa = H_ * O_, pp = H_ * O_ * H_;
  for (std::size_t p = 0; p < patterns_.size(); ++p) {
    for (std::size_t k = 0; k < pa; ++k) {
      const Term& t = patterns_[p].A[k];
      if (t.index >= 0) grad[t.index] += dA[p * pa + k] * t.coeff;
    }
    for (std::size_t k = 0; k < pp; ++k) {
      const Term& t = patterns_[p].P[k];
      if (t.index >= 0) grad[t.index] += dP[p * pp + k] * t.coeff;
    }
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return 1.0 - total * invB;
}

double PnObjective::value_serial(std::span<const double> z) const {
  std::vector<double> grad;
  return value_and_gradient_serial(z, grad);
}

double PnObjective::value_and_gradient_serial(std::span<const double> z,
                                              std::span<double> grad) const {
  const std::size_t H = H_, O = O_, T = T_;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  auto val = [&](const Term& t) { return t.index < 0 ? t.coeff : z[t.index] * t.coeff; };
  // Terms of every step of one sample, rebuilt from the space each time.
  std::vector<Term> A((T > 0 ? T - 1 : 0) * H * O), P((T > 0 ? T - 1 : 0) * H * O * H);
  std::vector<double> gamma(T * H), lam(H), prev(H);
  double total = 0.0;
  for (std::size_t b = 0; b < samples_.B; ++b) {
    std::fill(gamma.begin(), gamma.end(), 0.0);
    gamma[samples_.h(b, 0)] = 1.0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const int hp = samples_.h(b, t), hn = samples_.h(b, t + 1);
      const int x = traj_.x[t], o = traj_.o[t], xt = traj_.x_tilde[t];
      Term* At = A.data() + t * H * O;
      Term* Pt = P.data() + t * H * O * H;
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t ot = 0; ot < O; ++ot) {
          const bool live = reach_[samples_.h(b, 0)][t * H + h] && m_.e(h, xt, ot) > 0.0;
          At[h * O + ot] = live ? emission_term(h, ot, hp, x, o, xt) : Term{-1, 0.0};
          for (std::size_t h2 = 0; h2 < H; ++h2)
            Pt[(h * O + ot) * H + h2] =
                live ? transition_term(h, ot, h2, hp, o, hn) : Term{-1, 0.0};
        }
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t ot = 0; ot < O; ++ot)
          for (std::size_t h2 = 0; h2 < H; ++h2)
            gamma[(t + 1) * H + h2] += gamma[t * H + h] * val(At[h * O + ot]) *
                                       val(Pt[(h * O + ot) * H + h2]);
    }
    total += gamma[(T - 1) * H + forbidden_];
    if (!want_grad) continue;
    std::fill(lam.begin(), lam.end(), 0.0);
    lam[forbidden_] = -1.0 / static_cast<double>(samples_.B);
    for (std::size_t t = T - 1; t-- > 0;) {
      const Term* At = A.data() + t * H * O;
      const Term* Pt = P.data() + t * H * O * H;
      std::fill(prev.begin(), prev.end(), 0.0);
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t ot = 0; ot < O; ++ot) {
          const Term& ta = At[h * O + ot];
          const double a = val(ta), g = gamma[t * H + h];
          for (std::size_t h2 = 0; h2 < H; ++h2) {
            const Term& tp = Pt[(h * O + ot) * H + h2];
            const double pv = val(tp);
            prev[h] += a * pv * lam[h2];
            if (ta.index >= 0) grad[ta.index] += g * pv * lam[h2] * ta.coeff;
            if (tp.index >= 0) grad[tp.index] += g * a * lam[h2] * tp.coeff;
          }
        }
      lam.swap(prev);
    }
  }
  return 1.0 - total / static_cast<double>(samples_.B);
}

std::vector<double> PnObjective::forward_states(std::span<const double> z) const {
  Tables tb;
  build_tables(z, tb);
  const std::size_t stride = T_ * H_;
  std::vector<double> per_unique(weights_.size() * stride);
  for (std::size_t u = 0; u < weights_.size(); ++u)
    path_value(tb, u, per_unique.data() + u * stride);
  std::vector<double> out(samples_.B * stride);
  for (std::size_t b = 0; b < samples_.B; ++b)
    std::copy_n(per_unique.begin() + sample_to_unique_[b] * stride, stride,
                out.begin() + b * stride);
  return out;
}

double eval_pn(const ModelPrimitives& m, const PairwiseCoupling& z,
               const PosteriorSampleSet& samples, const Trajectory& traj, int forbidden_state) {
  return PnObjective(m, traj, samples, z.space, forbidden_state).value(z.z);
}

std::vector<double> grad_pn(const ModelPrimitives& m, const PairwiseCoupling& z,
                            const PosteriorSampleSet& samples, const Trajectory& traj,
                            int forbidden_state) {
  std::vector<double> g(z.z.size());
  PnObjective(m, traj, samples, z.space, forbidden_state).value_and_gradient(z.z, g);
  return g;
}

double eval_pn_expanded(const ModelPrimitives& m, const PairwiseCoupling& z,
                        const PosteriorSampleSet& samples, const Trajectory& traj,
                        int forbidden_state) {
  const std::size_t T = samples.T;
  const int H = static_cast<int>(m.H()), O = static_cast<int>(m.O());
  if (T > 6) throw std::invalid_argument("eval_pn_expanded: T must be at most 6");
  const double terms = std::pow(static_cast<double>(H * O), static_cast<double>(T - 1));
  if (terms > 1e7) throw std::invalid_argument("eval_pn_expanded: too many paths");
  const CouplingSpace& S = *z.space;

  // Joint probability of (counterfactual outcome, factual outcome) for a
  // parent pair, read straight from the blocks.
  auto joint = [&](BlockKind kind, int k, int l, int out_k, int out_l,
                   double self_mass) -> double {
    if (k == l) return out_k == out_l ? self_mass : 0.0;
    const auto ref = S.find(kind, k, l);
    if (ref.block < 0) throw StructuralError("eval_pn_expanded: missing block");
    return ref.transposed ? z.value(ref.block, out_l, out_k) : z.value(ref.block, out_k, out_l);
  };

  double total = 0.0;
  std::vector<int> path(T);
  for (std::size_t b = 0; b < samples.B; ++b) {
    for (std::size_t t = 0; t < T; ++t) path[t] = samples.h(b, t);
    // Depth-first over (o~_t, h~_{t+1}) for t = 1..T-1.
    auto rec = [&](auto&& self, std::size_t t, int ht, double w) -> double {
      if (t + 1 == T) return ht == forbidden_state ? w : 0.0;
      const int hp = path[t], hn = path[t + 1];
      const int x = traj.x[t], o = traj.o[t], xt = traj.x_tilde[t];
      const double e_den = m.e(hp, x, o), q_den = m.q(hp, o, hn);
      double acc = 0.0;
      for (int ot = 0; ot < O; ++ot) {
        if (m.e(ht, xt, ot) <= 0.0) continue;
        const double th = joint(BlockKind::emission, emission_parent(m, ht, xt),
                                emission_parent(m, hp, x), ot, o, e_den) /
                          e_den;
        if (th == 0.0) continue;
        for (int h2 = 0; h2 < H; ++h2) {
          if (m.q(ht, ot, h2) <= 0.0) continue;
          const double pi = joint(BlockKind::transition, transition_parent(m, ht, ot),
                                  transition_parent(m, hp, o), h2, hn, q_den) /
                            q_den;
          if (pi == 0.0) continue;
          acc += self(self, t + 1, h2, w * th * pi);
        }
      }
      return acc;
    };
    total += rec(rec, 0, path[0], 1.0);
  }
  return 1.0 - total / static_cast<double>(samples.B);
}

}  // namespace cfb
