#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "cfbounds/coupling.hpp"
#include "cfbounds/inference.hpp"
#include "cfbounds/model.hpp"
#include "cfbounds/rng.hpp"

namespace testing {

using namespace cfb;

inline double gamma_draw(Rng& rng) { return -std::log(1.0 - rng.uniform()); }

// Random stochastic vector; each entry is zeroed with probability `sparsity`
// but at least one survives.
inline std::vector<double> random_simplex(Rng& rng, std::size_t n, double sparsity) {
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = rng.uniform() < sparsity ? 0.0 : gamma_draw(rng);
    s += x;
  }
  if (s == 0.0) {
    v[rng.next() % n] = 1.0;
    s = 1.0;
  }
  for (auto& x : v) x /= s;
  return v;
}

inline ModelPrimitives random_model(Rng& rng, std::size_t H, std::size_t O, std::size_t X,
                                    double sparsity = 0.0) {
  ModelPrimitives m = make_model(H, O, X);
  m.p = random_simplex(rng, H, sparsity);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t x = 0; x < X; ++x) {
      auto row = random_simplex(rng, O, sparsity);
      for (std::size_t i = 0; i < O; ++i) m.e(h, x, i) = row[i];
    }
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < O; ++i) {
      auto row = random_simplex(rng, H, sparsity);
      for (std::size_t h2 = 0; h2 < H; ++h2) m.q(h, i, h2) = row[h2];
    }
  validate_primitives(m);
  return m;
}

// Forward-simulated trajectory, so its likelihood is positive.
inline Trajectory random_trajectory(Rng& rng, const ModelPrimitives& m, std::size_t T) {
  Trajectory tr;
  std::size_t h = rng.categorical(m.p);
  for (std::size_t t = 0; t < T; ++t) {
    const int x = static_cast<int>(rng.next() % m.X());
    const std::size_t o = rng.categorical(m.emission_row(h, x));
    tr.x.push_back(x);
    tr.o.push_back(static_cast<int>(o));
    tr.x_tilde.push_back(static_cast<int>(rng.next() % m.X()));
    if (t + 1 < T) h = rng.categorical(m.transition_row(h, o));
  }
  return tr;
}

// Calls f(path, joint) for every hidden path with its joint probability
// p(h1) prod E prod Q given the observations.
inline void enumerate_paths(const ModelPrimitives& m, const Trajectory& tr,
                            const std::function<void(const std::vector<int>&, double)>& f) {
  const std::size_t T = tr.T(), H = m.H();
  std::vector<int> path(T, 0);
  for (;;) {
    double w = m.p[path[0]];
    for (std::size_t t = 0; t < T && w > 0.0; ++t) {
      w *= m.e(path[t], tr.x[t], tr.o[t]);
      if (t + 1 < T) w *= m.q(path[t], tr.o[t], path[t + 1]);
    }
    f(path, w);
    std::size_t k = 0;
    while (k < T && ++path[k] == static_cast<int>(H)) path[k++] = 0;
    if (k == T) break;
  }
}

// Convex combination of `vertices` random-cost vertices of every block.
inline PairwiseCoupling random_coupling(Rng& rng, std::shared_ptr<const CouplingSpace> space,
                                        std::size_t vertices = 4) {
  PairwiseCoupling pc{space, std::vector<double>(space->dim(), 0.0)};
  std::vector<double> cost(space->dim()), v(space->dim());
  for (std::size_t b = 0; b < space->num_blocks(); ++b) {
    std::vector<double> w(vertices);
    double s = 0.0;
    for (auto& x : w) s += (x = gamma_draw(rng));
    for (std::size_t k = 0; k < vertices; ++k) {
      for (auto& c : cost) c = rng.uniform() - 0.5;
      solve_block(*space, b, cost, v);
      for (std::size_t j = space->offset(b); j < space->offset(b) + space->size(b); ++j)
        pc.z[j] += w[k] / s * v[j];
    }
  }
  return pc;
}

inline std::shared_ptr<const CouplingSpace> needed_space(const ModelPrimitives& m,
                                                         const Trajectory& tr,
                                                         const PosteriorSampleSet& s) {
  return std::make_shared<const CouplingSpace>(enumerate_blocks(m, needed_pairs(m, tr, s)));
}

}  // namespace testing
