#include "cfbounds/copula_sim.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cfbounds/rng.hpp"

namespace cfb {

namespace {

constexpr std::uint64_t kIndependenceStream = 0x696e64;
constexpr std::uint64_t kComonotonicStream = 0x636f6d;
constexpr std::uint64_t kNaiveStream = 0x6e6169;
constexpr std::uint64_t kEmissionNode = 0, kTransitionNode = 1;

CounterfactualPathSet make_set(const char* label, const PosteriorSampleSet& s,
                               std::size_t replicates) {
  CounterfactualPathSet cf;
  cf.copula = label;
  cf.samples = s.B;
  cf.replicates = replicates;
  cf.T = s.T;
  cf.h_tilde.assign(cf.size() * s.T, 0);
  cf.o_tilde.assign(cf.size() * s.T, 0);
  return cf;
}

double uniform_in(Rng& rng, std::pair<double, double> iv) {
  const auto [lo, hi] = iv;
  if (!(hi > lo)) throw std::logic_error("comonotonic draw from an empty interval");
  const double v = lo + (hi - lo) * rng.uniform();
  return v < hi ? v : std::nextafter(hi, lo);
}

}  // namespace

CounterfactualPathSet simulate_independence(const ModelPrimitives& m, const Trajectory& traj,
                                            const PosteriorSampleSet& samples,
                                            std::uint64_t seed, std::size_t replicates) {
  CounterfactualPathSet cf = make_set("independence", samples, replicates);
  const std::size_t T = samples.T, N = cf.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(N); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const std::size_t b = n / replicates, r = n % replicates;
    int* ht = cf.h_tilde.data() + n * T;
    int* ot = cf.o_tilde.data() + n * T;
    ht[0] = samples.h(b, 0);
    for (std::size_t t = 0; t < T; ++t) {
      const int h = samples.h(b, t);
      if (traj.x[t] == traj.x_tilde[t] && h == ht[t]) {
        ot[t] = traj.o[t];
      } else {
        Rng rng = Rng::substream(seed, {kIndependenceStream, b, r, t, kEmissionNode});
        ot[t] = static_cast<int>(rng.categorical(m.emission_row(ht[t], traj.x_tilde[t])));
      }
      if (t + 1 == T) break;
      if (h == ht[t] && traj.o[t] == ot[t]) {
        ht[t + 1] = samples.h(b, t + 1);
      } else {
        Rng rng = Rng::substream(seed, {kIndependenceStream, b, r, t, kTransitionNode});
        ht[t + 1] = static_cast<int>(rng.categorical(m.transition_row(ht[t], ot[t])));
      }
    }
  }
  return cf;
}

CounterfactualPathSet simulate_comonotonic(const ModelPrimitives&, const Trajectory& traj,
                                           const PosteriorSampleSet& samples,
                                           const RankOrdering& ranks, std::uint64_t seed,
                                           std::size_t replicates) {
  CounterfactualPathSet cf = make_set("comonotonic", samples, replicates);
  const std::size_t T = samples.T, N = cf.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(N); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const std::size_t b = n / replicates, r = n % replicates;
    int* ht = cf.h_tilde.data() + n * T;
    int* ot = cf.o_tilde.data() + n * T;
    ht[0] = samples.h(b, 0);
    for (std::size_t t = 0; t < T; ++t) {
      const int h = samples.h(b, t);
      Rng re = Rng::substream(seed, {kComonotonicStream, b, r, t, kEmissionNode});
      const double v = uniform_in(re, ranks.emission_interval(h, traj.x[t], traj.o[t]));
      ot[t] = ranks.emission_inverse(ht[t], traj.x_tilde[t], v);
      if (t + 1 == T) break;
      Rng rq = Rng::substream(seed, {kComonotonicStream, b, r, t, kTransitionNode});
      const double u =
          uniform_in(rq, ranks.transition_interval(h, traj.o[t], samples.h(b, t + 1)));
      ht[t + 1] = ranks.transition_inverse(ht[t], ot[t], u);
    }
  }
  return cf;
}

PnEstimate estimate_pn_mc(const CounterfactualPathSet& cf, int forbidden_state) {
  PnEstimate est;
  est.n = cf.size();
  if (est.n == 0) return est;
  std::size_t alive = 0;
  for (std::size_t n = 0; n < est.n; ++n) alive += cf.h(n, cf.T - 1) != forbidden_state;
  est.value = static_cast<double>(alive) / static_cast<double>(est.n);
  est.se = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(est.n));
  return est;
}

PnEstimate estimate_pn_naive(const ModelPrimitives& m, const std::vector<int>& x_tilde,
                             std::size_t R, std::uint64_t seed, int forbidden_state) {
  const std::size_t T = x_tilde.size();
  std::size_t alive = 0;
#pragma omp parallel for schedule(static) reduction(+ : alive)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(R); ++ri) {
    Rng rng = Rng::substream(seed, {kNaiveStream, static_cast<std::uint64_t>(ri)});
    auto h = static_cast<int>(rng.categorical(m.p));
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const auto o = static_cast<int>(rng.categorical(m.emission_row(h, x_tilde[t])));
      h = static_cast<int>(rng.categorical(m.transition_row(h, o)));
    }
    alive += h != forbidden_state;
  }
  PnEstimate est;
  est.n = R;
  if (R == 0) return est;
  est.value = static_cast<double>(alive) / static_cast<double>(R);
  est.se = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(R));
  return est;
}

void write_paths_csv(std::ostream& os, const CounterfactualPathSet& cf) {
  os << "copula,b,t,h_tilde,o_tilde\n";
  for (std::size_t n = 0; n < cf.size(); ++n)
    for (std::size_t t = 0; t < cf.T; ++t)
      os << cf.copula << ',' << n + 1 << ',' << t + 1 << ',' << cf.h(n, t) + 1 << ','
         << cf.o(n, t) + 1 << '\n';
}

}  // namespace cfb
