// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "cfbounds/case_study.hpp"
#include "cfbounds/copula_sim.hpp"
#include "cfbounds/objective.hpp"
#include "cfbounds/optimizer.hpp"
#include "helpers.hpp"

using namespace cfb;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-34s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

constexpr std::size_t kB = 100;
constexpr std::size_t kSeeds = 20;
const std::vector<std::size_t> kTs{4, 5, 6, 7, 8};

struct Cell {
  std::vector<double> lb, ub;
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void inference_oracle() {
  Rng rng(1001);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t H = 2 + rep % 2, T = 1 + rep % 5;
    const auto m = testing::random_model(rng, H, 3, 2, 0.25);
    const auto tr = testing::random_trajectory(rng, m, T);
    const auto ms = forward_backward(m, tr);
    const auto sm = smoothed_marginals(m, tr, ms);
    double L = 0.0;
    std::vector<double> unary(T * H, 0.0), pair(T * H * H, 0.0);
    testing::enumerate_paths(m, tr, [&](const std::vector<int>& p, double w) {
      L += w;
      for (std::size_t t = 0; t < T; ++t) {
        unary[t * H + p[t]] += w;
        if (t + 1 < T) pair[(t * H + p[t]) * H + p[t + 1]] += w;
      }
    });
    for (std::size_t t = 0; t < T; ++t) {
      // filtered distribution from the enumerated prefix
      Trajectory pre{{tr.o.begin(), tr.o.begin() + t + 1},
                     {tr.x.begin(), tr.x.begin() + t + 1},
                     {tr.x_tilde.begin(), tr.x_tilde.begin() + t + 1}};
      std::vector<double> alpha(H, 0.0);
      double Z = 0.0, Zm = 0.0;
      testing::enumerate_paths(m, pre, [&](const std::vector<int>& p, double w) {
        alpha[p[t]] += w;
        Z += w;
      });
      for (std::size_t h = 0; h < H; ++h) Zm += std::exp(ms.la(t, h));
      for (std::size_t h = 0; h < H; ++h) {
        worst = std::max(worst, std::abs(std::exp(ms.la(t, h)) / Zm - alpha[h] / Z));
        worst = std::max(worst, std::abs(sm.at(t, h) - unary[t * H + h] / L));
        if (t + 1 < T)
          for (std::size_t h2 = 0; h2 < H; ++h2)
            worst = std::max(worst,
                             std::abs(sm.pair(t, h, h2) - pair[(t * H + h) * H + h2] / L));
      }
    }
  }
  report(1, "inference vs path enumeration", worst <= 1e-12,
         fmt("max abs error %.2e over 50 models (tol 1e-12)", worst));
}

// Criteria 2 and 3 share the random instances.
void objective_oracle() {
  Rng rng(2002);
  double worst_eval = 0.0, worst_grad = 0.0, worst_norm = 0.0, worst_range = 0.0;
  int grads = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t H = 2 + rep % 2, T = 1 + rep % 6;
    const auto m = testing::random_model(rng, H, 2, 2, 0.2);
    const auto tr = testing::random_trajectory(rng, m, T);
    const auto s = sample_posterior_paths(m, tr, 6, rng.next());
    const auto space = testing::needed_space(m, tr, s);
    const int f = static_cast<int>(rng.next() % H);
    const auto z = testing::random_coupling(rng, space, 5);
    const PnObjective obj(m, tr, s, space, f);
    const double v = eval_pn(m, z, s, tr, f);
    worst_eval = std::max(worst_eval, std::abs(v - eval_pn_expanded(m, z, s, tr, f)));
    worst_range = std::max({worst_range, -v, v - 1.0});
    const auto g = obj.forward_states(z.z);
    for (std::size_t k = 0; k < s.B * T; ++k) {
      double sum = 0.0;
      for (std::size_t h = 0; h < H; ++h) sum += g[k * H + h];
      worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
    }
    if (T >= 2 && rep % 4 == 1 && grads < 20) {
      ++grads;
      const auto grad = grad_pn(m, z, s, tr, f);
      double gmax = 0.0, err = 0.0;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        auto zp = z.z, zm = z.z;
        zp[k] += 1e-6;
        zm[k] -= 1e-6;
        const double fd = (obj.value(zp) - obj.value(zm)) / 2e-6;
        gmax = std::max(gmax, std::abs(grad[k]));
        err = std::max(err, std::abs(fd - grad[k]));
      }
      worst_grad = std::max(worst_grad, err / std::max(gmax, 1e-12));
    }
  }
  // Cancer instances at feasible couplings of every kind.
  const auto sc = cancer::breast_cancer_model();
  for (const char* label : {"path1", "path2"})
    for (std::size_t T : kTs) {
      const auto tr = cancer::make_path(label, T);
      const auto s = sample_posterior_paths(sc.model, tr, kB, 1);
      const auto space = build_space(sc, tr, s, ConstraintMode::base);
      const PnObjective obj(sc.model, tr, s, space, cancer::kDeath);
      std::vector<std::vector<double>> zs{independence_coupling(space).z,
                                          comonotonic_coupling(space, sc.ranks).z,
                                          testing::random_coupling(rng, space).z};
      for (const auto& z : zs) {
        const double v = obj.value(z);
        worst_range = std::max({worst_range, -v, v - 1.0});
        const auto g = obj.forward_states(z);
        for (std::size_t k = 0; k < kB * T; ++k) {
          double sum = 0.0;
          for (std::size_t h = 0; h < 7; ++h) sum += g[k * 7 + h];
          worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
        }
      }
    }
  report(2, "objective vs expanded and FD",
         worst_eval <= 1e-10 && worst_grad <= 1e-5 && grads >= 20,
         fmt("eval err %.2e (tol 1e-10), grad rel err %.2e (tol 1e-5)", worst_eval, worst_grad) +
             ", " + std::to_string(grads) + " gradient points");
  report(3, "normalisation", worst_norm <= 1e-7 && worst_range <= 1e-7,
         fmt("max |sum gamma - 1| %.2e, range excess %.2e (tol 1e-7)", worst_norm, worst_range));
}

void copula_cross_check() {
  const auto sc = cancer::breast_cancer_model();
  double worst = 0.0;
  int bad = 0;
  for (const char* label : {"path1", "path2"})
    for (std::size_t T : kTs) {
      const auto tr = cancer::make_path(label, T);
      const auto s = sample_posterior_paths(sc.model, tr, kB, 1);
      const auto space = build_space(sc, tr, s, ConstraintMode::base);
      const PnObjective obj(sc.model, tr, s, space, cancer::kDeath);
      const std::size_t R = 1000;
      const auto ind = estimate_pn_mc(simulate_independence(sc.model, tr, s, 11, R), cancer::kDeath);
      const auto com =
          estimate_pn_mc(simulate_comonotonic(sc.model, tr, s, sc.ranks, 11, R), cancer::kDeath);
      const double vi = obj.value(independence_coupling(space).z);
      const double vc = obj.value(comonotonic_coupling(space, sc.ranks).z);
      for (auto [est, v] : {std::pair{ind, vi}, std::pair{com, vc}}) {
        const double se = std::max(est.se, 1.0 / static_cast<double>(est.n));
        const double z = std::abs(est.value - v) / se;
        worst = std::max(worst, z);
        bad += z > 3.0;
      }
    }
  report(4, "copula simulation vs objective", bad == 0,
         fmt("max |est - eval| = %.2f SE over 20 cells (tol 3 SE)", worst));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  inference_oracle();
  objective_oracle();
  copula_cross_check();

  // Bound grid shared by criteria 5-8, 10 and 11.
  const auto sc = cancer::breast_cancer_model();
  SolveOptions opts;  // 20 random restarts on top of the copula starts
  std::map<std::tuple<std::string, std::size_t, std::string>, Cell> grid;
  double sandwich_worst = 0.0, nest_worst = 0.0;
  for (const char* label : {"path1", "path2"})
    for (std::size_t T : kTs) {
      const auto tr = cancer::make_path(label, T);
      for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const auto nb = nested_bounds(sc, tr, kB, seed, opts);
        const auto pm = bound_pn(sc, tr, kB, seed, ConstraintMode::pm, opts);
        for (auto [mode, b] : {std::pair{"base", &nb.base}, {"cs", &nb.cs}, {"pm", &pm}}) {
          auto& cell = grid[{label, T, mode}];
          cell.lb.push_back(b->lb.value);
          cell.ub.push_back(b->ub.value);
        }
        const PnObjective obj(sc.model, tr, nb.base.samples, nb.base.space, cancer::kDeath);
        for (const auto& z : {independence_coupling(nb.base.space).z,
                              comonotonic_coupling(nb.base.space, sc.ranks).z}) {
          const double v = obj.value(z);
          sandwich_worst = std::max({sandwich_worst, nb.base.lb.value - v, v - nb.base.ub.value});
        }
        if (std::string(label) == "path1")
          nest_worst = std::max({nest_worst, nb.base.lb.value - nb.cs.lb.value,
                                 nb.cs.lb.value - nb.cs.ub.value, nb.cs.ub.value - nb.base.ub.value});
      }
    }
  report(5, "sandwich at copula couplings", sandwich_worst <= 1e-9,
         fmt("max violation %.2e over 200 instances (tol 1e-9)", sandwich_worst));
  report(6, "nesting base vs cs (path 1)", nest_worst <= 1e-6,
         fmt("max violation %.2e over 100 instances (tol 1e-6)", nest_worst));

  double min_lb = 1.0, max_base_gap = 0.0, max_pm_gap = 0.0, max_lb2 = 0.0;
  for (std::size_t T : kTs) {
    const auto& base = grid[{"path1", T, "base"}];
    const auto& pm = grid[{"path1", T, "pm"}];
    min_lb = std::min({min_lb, mean(base.lb), mean(grid[{"path1", T, "cs"}].lb), mean(pm.lb)});
    max_base_gap = std::max(max_base_gap, mean(base.ub) - mean(base.lb));
    max_pm_gap = std::max(max_pm_gap, mean(pm.ub) - mean(pm.lb));
    max_lb2 = std::max(max_lb2, mean(grid[{"path2", T, "base"}].lb));
  }
  report(7, "path 1 bounds level and gaps",
         min_lb >= 0.85 && max_base_gap <= 0.13 && max_pm_gap <= 0.03,
         fmt("min lb %.4f (>= 0.85), base gap %.4f (<= 0.13), pm gap %.4f (<= 0.03)", min_lb,
             max_base_gap, max_pm_gap));
  report(8, "path 2 base lower bound", max_lb2 <= 0.10,
         fmt("max mean lb %.4f (<= 0.10)", max_lb2));

  const auto naive = estimate_pn_naive(sc.model, std::vector<int>(10, 0), 100000, 1, cancer::kDeath);
  report(9, "naive estimate at T = 10", naive.value >= 0.95,
         fmt("estimate %.4f +- %.4f (>= 0.95)", naive.value, naive.se));

  double worst_sd = 0.0;
  for (const auto& [key, cell] : grid) worst_sd = std::max({worst_sd, sd(cell.lb), sd(cell.ub)});
  report(10, "seed stability of the bounds", worst_sd <= 0.025,
         fmt("max sd over 20 seeds %.4f (<= 0.025)", worst_sd));

  double worst_drop = 0.0;
  for (const char* mode : {"base", "cs", "pm"})
    for (std::size_t k = 1; k < kTs.size(); ++k)
      worst_drop = std::max(worst_drop, mean(grid[{"path1", kTs[k - 1], mode}].lb) -
                                            mean(grid[{"path1", kTs[k], mode}].lb));
  report(11, "path 1 lower bound grows with T", worst_drop <= 0.02,
         fmt("largest decrease %.4f (<= 0.02)", worst_drop));

  {
    ModelPrimitives m = make_model(1, 2, 3);
    m.p = {1};
    m.E = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    m.Q = {1, 1};
    validate_primitives(m);
    auto space = std::make_shared<const CouplingSpace>(enumerate_blocks(
        m, {{BlockKind::emission, 0, 1}, {BlockKind::emission, 1, 2}, {BlockKind::emission, 0, 2}}));
    PairwiseCoupling pc{space, std::vector<double>(space->dim(), 0.0)};
    for (int v = 0; v < 2; ++v) {
      pc.z[space->cell(space->find(BlockKind::emission, 0, 1), v, v)] = 0.5;
      pc.z[space->cell(space->find(BlockKind::emission, 1, 2), v, v)] = 0.5;
      pc.z[space->cell(space->find(BlockKind::emission, 0, 2), v, 1 - v)] = 0.5;
    }
    const double r = check_feasibility(pc).max_residual;
    report(12, "pairwise set without a joint", r <= 1e-12,
           fmt("residual %.2e; pairwise-consistent although no joint exists", r));
  }

  {
    ModelPrimitives m = make_model(1, 3, 2);
    m.p = {1.0};
    m.E = {0.2, 0.3, 0.5, 0.2, 0.2, 0.6};
    m.Q = {1.0, 1.0, 1.0};
    validate_primitives(m);
    const auto blocks = enumerate_blocks(m, {{BlockKind::emission, 0, 1}});
    const auto f = cs_forbidden_cells(blocks[0]);
    report(13, "stability keeps bad given better", f[1 * 3 + 0] == 0,
           "cell (better, bad) forbidden = " + std::to_string(f[3]));
  }

  {
    std::size_t early = 0, paths = 0;
    for (const char* label : {"path1", "path2"})
      for (std::size_t T : kTs) {
        const auto tr = cancer::make_path(label, T);
        for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
          const auto s = sample_posterior_paths(sc.model, tr, kB, seed);
          const auto cf = simulate_comonotonic(sc.model, tr, s, sc.ranks, seed, 10);
          for (std::size_t n = 0; n < cf.size(); ++n) {
            ++paths;
            for (std::size_t t = 0; t + 1 < T; ++t) early += cf.h(n, t) == cancer::kDeath;
          }
        }
      }
    report(14, "no early comonotonic deaths", early == 0,
           std::to_string(early) + " early deaths in " + std::to_string(paths) + " paths");
  }

  {
    const auto tr = cancer::make_path("path1", 100);
    const auto s = sample_posterior_paths(sc.model, tr, kB, 1);
    const auto space = build_space(sc, tr, s, ConstraintMode::base);
    Rng rng(3);
    const auto z = testing::random_coupling(rng, space);
    double worst_ms = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      const auto a = std::chrono::steady_clock::now();
      const double v = eval_pn(sc.model, z, s, tr, cancer::kDeath);
      const auto g = grad_pn(sc.model, z, s, tr, cancer::kDeath);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - a).count();
      worst_ms = std::max(worst_ms, ms);
      if (!std::isfinite(v) || g.size() != space->dim()) worst_ms = 1e9;
    }
    report(15, "eval + grad at T = 100, B = 100", worst_ms < 1000.0,
           fmt("slowest of 3 calls %.1f ms (< 1000 ms)", worst_ms));
  }

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d failed, %.1f s\n", failures, total);
  return failures ? 1 : 0;
}
