#include "cfbounds/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cfbounds/errors.hpp"
#include "cfbounds/rng.hpp"

namespace cfb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kPosteriorStream = 0x706f7374;

double max_of(const double* v, std::size_t n) {
  double mx = kNegInf;
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, v[k]);
  return mx;
}

[[noreturn]] void impossible(std::size_t t) {
  throw ImpossibleTrajectory(t, "impossible trajectory: zero probability at t=" +
                                    std::to_string(t));
}

}  // namespace

MessageSet forward_filter(const ModelPrimitives& m, const Trajectory& traj) {
  check_trajectory(m, traj);
  const std::size_t T = traj.T(), H = m.H();
  MessageSet ms;
  ms.T = T;
  ms.H = H;
  ms.log_alpha.assign(T * H, kNegInf);
  for (std::size_t h = 0; h < H; ++h) {
    const double a = m.p[h] * m.e(h, traj.x[0], traj.o[0]);
    ms.log_alpha[h] = a > 0.0 ? std::log(a) : kNegInf;
  }
  if (max_of(ms.log_alpha.data(), H) == kNegInf) impossible(1);
  std::vector<double> w(H);
  for (std::size_t t = 1; t < T; ++t) {
    const double* prev = ms.log_alpha.data() + (t - 1) * H;
    const double shift = max_of(prev, H);
    for (std::size_t h = 0; h < H; ++h) w[h] = std::exp(prev[h] - shift);
    const int o_prev = traj.o[t - 1];
    double* cur = ms.log_alpha.data() + t * H;
    for (std::size_t h2 = 0; h2 < H; ++h2) {
      const double em = m.e(h2, traj.x[t], traj.o[t]);
      if (em <= 0.0) continue;
      double s = 0.0;
      for (std::size_t h = 0; h < H; ++h)
        if (w[h] > 0.0) s += m.q(h, o_prev, h2) * w[h];
      if (s > 0.0) cur[h2] = std::log(em * s) + shift;
    }
    if (max_of(cur, H) == kNegInf) impossible(t + 1);
  }
  const double* last = ms.log_alpha.data() + (T - 1) * H;
  const double shift = max_of(last, H);
  double s = 0.0;
  for (std::size_t h = 0; h < H; ++h) s += std::exp(last[h] - shift);
  ms.log_likelihood = std::log(s) + shift;
  return ms;
}

MessageSet backward_smooth(const ModelPrimitives& m, const Trajectory& traj) {
  check_trajectory(m, traj);
  const std::size_t T = traj.T(), H = m.H();
  MessageSet ms;
  ms.T = T;
  ms.H = H;
  ms.log_beta.assign(T * H, kNegInf);
  std::fill(ms.log_beta.begin() + (T - 1) * H, ms.log_beta.end(), 0.0);
  std::vector<double> w(H);
  for (std::size_t t = T - 1; t-- > 0;) {
    const double* next = ms.log_beta.data() + (t + 1) * H;
    const double shift = max_of(next, H);
    for (std::size_t h2 = 0; h2 < H; ++h2)
      w[h2] = std::exp(next[h2] - shift) * m.e(h2, traj.x[t + 1], traj.o[t + 1]);
    double* cur = ms.log_beta.data() + t * H;
    for (std::size_t h = 0; h < H; ++h) {
      double s = 0.0;
      for (std::size_t h2 = 0; h2 < H; ++h2)
        if (w[h2] > 0.0) s += m.q(h, traj.o[t], h2) * w[h2];
      if (s > 0.0) cur[h] = std::log(s) + shift;
    }
    if (max_of(cur, H) == kNegInf) impossible(t + 2);
  }
  return ms;
}

MessageSet forward_backward(const ModelPrimitives& m, const Trajectory& traj) {
  MessageSet ms = forward_filter(m, traj);
  ms.log_beta = backward_smooth(m, traj).log_beta;
  return ms;
}

SmoothedMarginals smoothed_marginals(const ModelPrimitives& m, const Trajectory& traj,
                                     const MessageSet& ms) {
  const std::size_t T = ms.T, H = ms.H;
  SmoothedMarginals sm;
  sm.T = T;
  sm.H = H;
  sm.unary.assign(T * H, 0.0);
  sm.pairwise.assign(T > 1 ? (T - 1) * H * H : 0, 0.0);
  std::vector<double> lv(H * H);
  for (std::size_t t = 0; t < T; ++t) {
    double* u = sm.unary.data() + t * H;
    for (std::size_t h = 0; h < H; ++h) lv[h] = ms.la(t, h) + ms.lb(t, h);
    const double shift = max_of(lv.data(), H);
    double s = 0.0;
    for (std::size_t h = 0; h < H; ++h) s += (u[h] = std::exp(lv[h] - shift));
    for (std::size_t h = 0; h < H; ++h) u[h] /= s;
  }
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t h2 = 0; h2 < H; ++h2) {
        const double f = m.q(h, traj.o[t], h2) * m.e(h2, traj.x[t + 1], traj.o[t + 1]);
        lv[h * H + h2] = f > 0.0 ? ms.la(t, h) + std::log(f) + ms.lb(t + 1, h2) : kNegInf;
      }
    const double shift = max_of(lv.data(), H * H);
    double* pw = sm.pairwise.data() + t * H * H;
    double s = 0.0;
    for (std::size_t k = 0; k < H * H; ++k) s += (pw[k] = std::exp(lv[k] - shift));
    for (std::size_t k = 0; k < H * H; ++k) pw[k] /= s;
  }
  return sm;
}

PosteriorSampleSet sample_posterior_paths(const ModelPrimitives& m, const Trajectory& traj,
                                          std::size_t B, std::uint64_t seed) {
  const MessageSet ms = forward_filter(m, traj);
  const std::size_t T = ms.T, H = ms.H;
  PosteriorSampleSet out;
  out.B = B;
  out.T = T;
  out.seed = seed;
  out.paths.assign(B * T, 0);

  // Filtered weights rescaled per step; sampling only needs proportionality.
  std::vector<double> w(T * H);
  for (std::size_t t = 0; t < T; ++t) {
    const double shift = max_of(ms.log_alpha.data() + t * H, H);
    for (std::size_t h = 0; h < H; ++h) w[t * H + h] = std::exp(ms.la(t, h) - shift);
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(B); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    Rng rng = Rng::substream(seed, {kPosteriorStream, b});
    std::vector<double> probs(H);
    int* path = out.paths.data() + b * T;
    path[T - 1] = static_cast<int>(rng.categorical({w.data() + (T - 1) * H, H}));
    for (std::size_t t = T - 1; t-- > 0;) {
      for (std::size_t h = 0; h < H; ++h)
        probs[h] = w[t * H + h] * m.q(h, traj.o[t], path[t + 1]);
      path[t] = static_cast<int>(rng.categorical(probs));
    }
  }
  return out;
}

void write_samples_csv(std::ostream& os, const PosteriorSampleSet& s) {
  os << "b,t,h\n";
  for (std::size_t b = 0; b < s.B; ++b)
    for (std::size_t t = 0; t < s.T; ++t)
      os << b + 1 << ',' << t + 1 << ',' << s.h(b, t) + 1 << '\n';
}

}  // namespace cfb
