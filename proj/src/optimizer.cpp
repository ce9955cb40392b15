#include "cfbounds/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "cfbounds/errors.hpp"
#include "cfbounds/rng.hpp"

namespace cfb {

namespace {

constexpr std::uint64_t kStartStream = 0x7374617274;
constexpr std::size_t kMaxNodes = 129;

struct LineResult {
  double gamma = 0.0;
  double value = 0.0;
};

// Maximises phi on [0, gmax] given phi(0) = f0. The restriction is a
// polynomial, so values at Chebyshev-Lobatto nodes pin down its
// interpolant; the interpolant's maximiser is then checked against phi.
LineResult chebyshev_search(const std::function<double(double)>& phi, double f0, double gmax,
                            std::size_t nodes) {
  const std::size_t N = std::max<std::size_t>(nodes, 3);
  std::vector<double> xs(N), ys(N), ws(N);
  for (std::size_t j = 0; j < N; ++j) {
    xs[j] = 0.5 * gmax * (1.0 - std::cos(std::numbers::pi * double(j) / double(N - 1)));
    ws[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N - 1) ? 0.5 : 1.0);
  }
  xs[0] = 0.0;
  xs[N - 1] = gmax;
  ys[0] = f0;
  for (std::size_t j = 1; j < N; ++j) ys[j] = phi(xs[j]);
  std::size_t jb = 0;
  for (std::size_t j = 1; j < N; ++j)
    if (ys[j] > ys[jb]) jb = j;

  auto interp = [&](double x) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double dx = x - xs[j];
      if (dx == 0.0) return ys[j];
      const double w = ws[j] / dx;
      num += w * ys[j];
      den += w;
    }
    return num / den;
  };
  const std::size_t M = 16 * N;
  double xb = 0.0, pb = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= M; ++k) {
    const double x = gmax * double(k) / double(M);
    const double p = interp(x);
    if (p > pb) {
      pb = p;
      xb = x;
    }
  }
  const double h = gmax / double(M);
  double lo = std::max(0.0, xb - h), hi = std::min(gmax, xb + h);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
  double pa = interp(a), pbb = interp(b);
  for (int it = 0; it < 60 && hi - lo > 1e-15 * std::max(1.0, gmax); ++it) {
    if (pa >= pbb) {
      hi = b;
      b = a;
      pbb = pa;
      a = hi - r * (hi - lo);
      pa = interp(a);
    } else {
      lo = a;
      a = b;
      pa = pbb;
      b = lo + r * (hi - lo);
      pbb = interp(b);
    }
  }
  const double xs_star = 0.5 * (lo + hi);
  LineResult res{xs[jb], ys[jb]};
  if (xs_star > 0.0) {
    const double v = phi(xs_star);
    if (v > res.value) res = {xs_star, v};
  }
  return res;
}

LineResult backtracking_search(const std::function<double(double)>& phi, double f0,
                               double gmax, double slope) {
  double g = gmax;
  for (int k = 0; k < 50; ++k, g *= 0.5) {
    const double v = phi(g);
    if (v > f0 && v >= f0 + 1e-4 * g * slope) return {g, v};
  }
  return {0.0, f0};
}

struct AtomSet {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;

  std::size_t add(const std::vector<double>& p) {
    for (std::size_t k = 0; k < points.size(); ++k)
      if (points[k] == p) return k;
    points.push_back(p);
    weights.push_back(0.0);
    return points.size() - 1;
  }
  void drop(std::size_t k) {
    points.erase(points.begin() + k);
    weights.erase(weights.begin() + k);
  }
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

const char* to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::base:
      return "base";
    case ConstraintMode::cs:
      return "cs";
    case ConstraintMode::pm:
      return "pm";
    case ConstraintMode::cs_pm:
      return "cs+pm";
  }
  return "?";
}

ConstraintMode parse_mode(const std::string& s) {
  if (s == "base") return ConstraintMode::base;
  if (s == "cs") return ConstraintMode::cs;
  if (s == "pm") return ConstraintMode::pm;
  if (s == "cs+pm" || s == "cs_pm") return ConstraintMode::cs_pm;
  throw InputError("unknown constraint mode '" + s + "' (expected base, cs, pm or cs+pm)");
}

ObjectiveFns objective_fns(const PnObjective& obj) {
  ObjectiveFns f;
  f.value = [&obj](std::span<const double> z) { return obj.value(z); };
  f.value_and_gradient = [&obj](std::span<const double> z, std::span<double> g) {
    return obj.value_and_gradient(z, g);
  };
  f.degree = obj.horizon() > 1 ? 2 * (obj.horizon() - 1) : 0;
  return f;
}

PairwiseCoupling lp_block_oracle(std::span<const double> gradient,
                                 std::shared_ptr<const CouplingSpace> space, Direction dir) {
  PairwiseCoupling out{space, std::vector<double>(space->dim(), 0.0)};
  std::vector<double> cost(gradient.begin(), gradient.end());
  if (dir == Direction::maximize)
    for (double& c : cost) c = -c;
  for (std::size_t b = 0; b < space->num_blocks(); ++b) solve_block(*space, b, cost, out.z);
  return out;
}

FwResult frank_wolfe_extremize(const CouplingSpace& space, std::vector<double> z0,
                               const ObjectiveFns& f, const SolveOptions& opts) {
  const double sgn = opts.direction == Direction::maximize ? 1.0 : -1.0;
  const std::size_t n = space.dim();
  const std::size_t nodes = std::min(kMaxNodes, f.degree + 3);
  std::vector<double> z = std::move(z0), grad(n), g(n), cost(n), s(n), d(n), trial(n);
  AtomSet atoms;
  if (opts.away_steps) {
    atoms.add(z);
    atoms.weights[0] = 1.0;
  }
  FwResult res;
  auto phi = [&](double gamma) {
    for (std::size_t k = 0; k < n; ++k) trial[k] = z[k] + gamma * d[k];
    const double v = f.value(trial);
    if (!std::isfinite(v)) throw std::runtime_error("objective is not finite along the step");
    return sgn * v;
  };

  for (std::size_t it = 0;; ++it) {
    const double val = f.value_and_gradient(z, grad);
    if (!std::isfinite(val))
      throw std::runtime_error("objective is not finite at the current point");
    res.value = val;
    res.iterations = it;
    res.history.push_back(val);
    const double F = sgn * val;
    for (std::size_t k = 0; k < n; ++k) {
      g[k] = sgn * grad[k];
      cost[k] = -g[k];
    }
    for (std::size_t b = 0; b < space.num_blocks(); ++b) solve_block(space, b, cost, s);
    double gap = 0.0;
    for (std::size_t k = 0; k < n; ++k) gap += g[k] * (s[k] - z[k]);
    res.gap = gap;
    if (gap <= opts.fw_gap_tol || it >= opts.max_iters) break;

    auto try_direction = [&](bool away, std::size_t ia) -> LineResult {
      double gmax = 1.0, slope;
      if (away) {
        const auto& a = atoms.points[ia];
        for (std::size_t k = 0; k < n; ++k) d[k] = z[k] - a[k];
        const double w = atoms.weights[ia];
        gmax = w / (1.0 - w);
      } else {
        for (std::size_t k = 0; k < n; ++k) d[k] = s[k] - z[k];
      }
      slope = dot(g, d);
      LineResult lr = opts.step_rule == StepRule::exact_line_search
                          ? chebyshev_search(phi, F, gmax, nodes)
                          : backtracking_search(phi, F, gmax, slope);
      if (!(lr.value > F) && opts.step_rule == StepRule::exact_line_search)
        lr = backtracking_search(phi, F, gmax / 64.0, slope);
      return lr;
    };

    bool away = false;
    std::size_t ia = 0;
    if (opts.away_steps && atoms.points.size() > 1) {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < atoms.points.size(); ++k) {
        const double v = dot(g, atoms.points[k]);
        if (v < worst) {
          worst = v;
          ia = k;
        }
      }
      const double gap_away = dot(g, z) - worst;
      away = gap_away > gap && atoms.weights[ia] < 1.0;
    }
    LineResult lr = try_direction(away, ia);
    if (!(lr.value > F) && away) {
      away = false;
      lr = try_direction(false, 0);
    }
    if (!(lr.value > F) || lr.gamma <= 0.0) break;  // stalled

    for (std::size_t k = 0; k < n; ++k) z[k] = std::max(0.0, z[k] + lr.gamma * d[k]);
    if (!opts.away_steps) continue;
    if (away) {
      for (double& w : atoms.weights) w *= 1.0 + lr.gamma;
      atoms.weights[ia] -= lr.gamma;
      if (atoms.weights[ia] <= 1e-14) atoms.drop(ia);
    } else if (lr.gamma >= 1.0) {
      atoms.points.assign(1, s);
      atoms.weights.assign(1, 1.0);
    } else {
      for (double& w : atoms.weights) w *= 1.0 - lr.gamma;
      const std::size_t k = atoms.add(s);
      atoms.weights[k] += lr.gamma;
    }
  }
  res.z = std::move(z);
  return res;
}

BoundReport extremize(const PnObjective& obj, const std::vector<LabeledStart>& starts,
                      const SolveOptions& opts) {
  if (starts.empty()) throw std::invalid_argument("extremize: no starting points");
  const auto t0 = std::chrono::steady_clock::now();
  const ObjectiveFns f = objective_fns(obj);
  std::vector<FwResult> runs(starts.size());
  std::vector<double> start_values(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(starts.size()); ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    start_values[r] = obj.value(starts[r].z);
    runs[r] = frank_wolfe_extremize(*obj.space(), starts[r].z, f, opts);
  }
  BoundReport rep;
  const bool max = opts.direction == Direction::maximize;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    rep.trace.push_back({starts[r].label, runs[r].iterations, runs[r].gap, start_values[r],
                         runs[r].value});
    const double v = runs[r].value, b = runs[rep.best_restart].value;
    if (max ? v > b : v < b) rep.best_restart = r;
  }
  FwResult& best = runs[rep.best_restart];
  rep.value = best.value;
  rep.fw_gap = best.gap;
  rep.argument = {obj.space(), std::move(best.z)};
  rep.feasibility_residual = check_feasibility(rep.argument).max_residual;
  rep.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::shared_ptr<const CouplingSpace> build_space(const Scenario& sc, const Trajectory& traj,
                                                 const PosteriorSampleSet& samples,
                                                 ConstraintMode mode) {
  auto blocks = enumerate_blocks(sc.model, needed_pairs(sc.model, traj, samples));
  if (mode == ConstraintMode::cs || mode == ConstraintMode::cs_pm) add_cs_constraints(blocks);
  if (mode == ConstraintMode::pm || mode == ConstraintMode::cs_pm)
    add_transition_zeros(blocks, sc.model, sc.pm_zeros);
  return std::make_shared<const CouplingSpace>(std::move(blocks));
}

std::vector<LabeledStart> make_starts(const Scenario& sc,
                                      std::shared_ptr<const CouplingSpace> space,
                                      const SolveOptions& opts, std::uint64_t seed) {
  std::vector<LabeledStart> starts;
  std::vector<std::vector<double>> anchors;
  try {
    starts.push_back({"independence", independence_coupling(space).z});
  } catch (const InfeasibleCoupling&) {
    starts.push_back({"phase1", phase1_feasible_point(space).z});
  }
  anchors.push_back(starts.back().z);
  try {
    starts.push_back({"comonotonic", comonotonic_coupling(space, sc.ranks).z});
    anchors.push_back(starts.back().z);
  } catch (const InfeasibleCoupling&) {
  }
  for (std::size_t k = 0; k < opts.mandatory_starts.size(); ++k)
    starts.push_back({"extra-" + std::to_string(k + 1),
                      transfer(opts.mandatory_starts[k], space).z});

  const std::size_t n = space->dim();
  std::vector<double> cost(n), vertex(n);
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    Rng rng = Rng::substream(seed, {kStartStream, opts.seed, r});
    for (double& c : cost) c = 2.0 * rng.uniform() - 1.0;
    for (std::size_t b = 0; b < space->num_blocks(); ++b) solve_block(*space, b, cost, vertex);
    // Dirichlet(1,...,1) mix of the random vertex and the copula anchors.
    std::vector<double> w(anchors.size() + 1);
    double tot = 0.0;
    for (double& v : w) tot += (v = -std::log(1.0 - rng.uniform()));
    std::vector<double> z(n);
    for (std::size_t k = 0; k < n; ++k) {
      double v = w[0] * vertex[k];
      for (std::size_t a = 0; a < anchors.size(); ++a) v += w[a + 1] * anchors[a][k];
      z[k] = v / tot;
    }
    starts.push_back({"random-" + std::to_string(r + 1), std::move(z)});
  }
  return starts;
}

Bounds bound_pn(const Scenario& sc, const Trajectory& traj, std::size_t B, std::uint64_t seed,
                ConstraintMode mode, const SolveOptions& opts) {
  Bounds out;
  out.samples = sample_posterior_paths(sc.model, traj, B, seed);
  out.space = build_space(sc, traj, out.samples, mode);
  const PnObjective obj(sc.model, traj, out.samples, out.space, sc.forbidden_state);
  const auto starts = make_starts(sc, out.space, opts, seed);
  SolveOptions o = opts;
  o.direction = Direction::minimize;
  out.lb = extremize(obj, starts, o);
  o.direction = Direction::maximize;
  out.ub = extremize(obj, starts, o);
  return out;
}

NestedBounds nested_bounds(const Scenario& sc, const Trajectory& traj, std::size_t B,
                           std::uint64_t seed, const SolveOptions& opts) {
  NestedBounds nb;
  const Bounds first = bound_pn(sc, traj, B, seed, ConstraintMode::base, opts);
  SolveOptions o = opts;
  o.mandatory_starts.push_back(first.lb.argument);
  o.mandatory_starts.push_back(first.ub.argument);
  nb.cs = bound_pn(sc, traj, B, seed, ConstraintMode::cs, o);
  // The rerun starts from both sets of optima, so it can only widen.
  o.mandatory_starts.push_back(nb.cs.lb.argument);
  o.mandatory_starts.push_back(nb.cs.ub.argument);
  o.restarts = 0;
  nb.base = bound_pn(sc, traj, B, seed, ConstraintMode::base, o);
  return nb;
}

}  // namespace cfb
