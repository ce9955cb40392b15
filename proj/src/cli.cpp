#include "cfbounds/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cfbounds/case_study.hpp"
#include "cfbounds/copula_sim.hpp"
#include "cfbounds/errors.hpp"
#include "cfbounds/inference.hpp"
#include "cfbounds/model_io.hpp"
#include "cfbounds/optimizer.hpp"

namespace cfb::cli {

namespace {

struct RunConfig {
  std::string scenario;
  std::string model;
  std::string traj;
  std::string paths = "path1";
  std::string T = "4";
  std::size_t B = 100;
  std::string seeds = "1";
  std::string modes = "base,cs,pm";
  std::string copulas = "independence,comonotonic,naive";
  std::size_t restarts = 20;
  std::size_t max_iters = 200;
  double fw_tol = 1e-6;
  std::size_t replicates = 100;
  std::size_t naive_draws = 100000;
  double in_situ_stay = 0.5;
  bool nest = true;
  std::string out;
  std::string figure;
  int threads = 0;
  bool timing = false;
};

struct Case {
  std::string label;
  Trajectory traj;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::uint64_t to_uint(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s[0] == '-')
    throw InputError(std::string("invalid ") + what + " '" + s + "'");
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_text(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

Scenario resolve_scenario(const RunConfig& cfg) {
  if (!cfg.scenario.empty() && !cfg.model.empty())
    throw InputError("give either --scenario or --model, not both");
  const std::string& name = cfg.model.empty() ? cfg.scenario : cfg.model;
  if (name.empty()) throw InputError("one of --scenario or --model is required");
  if (name == "breast-cancer") {
    cancer::Options o;
    o.in_situ_stay = cfg.in_situ_stay;
    if (!(o.in_situ_stay >= 0.0 && o.in_situ_stay <= 1.0))
      throw InputError("--in-situ-stay must lie in [0, 1]");
    return cancer::breast_cancer_model(o);
  }
  return load_scenario(name);
}

std::vector<Case> resolve_cases(const RunConfig& cfg, const Scenario& sc) {
  std::vector<Case> out;
  if (!cfg.traj.empty()) {
    Trajectory tr = load_trajectory(cfg.traj);
    check_trajectory(sc.model, tr);
    out.push_back({std::filesystem::path(cfg.traj).stem().string(), std::move(tr)});
    return out;
  }
  if (sc.name != "breast-cancer")
    throw InputError("--path only names built-in paths; use --traj with a model file");
  const auto Ts = parse_range(cfg.T);
  for (const auto& label : split(cfg.paths, ','))
    for (std::size_t T : Ts) out.push_back({label, cancer::make_path(label, T)});
  return out;
}

SolveOptions solve_options(const RunConfig& cfg) {
  SolveOptions o;
  o.restarts = cfg.restarts;
  o.max_iters = cfg.max_iters;
  o.fw_gap_tol = cfg.fw_tol;
  return o;
}

// Output goes to a file under --out when given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const RunConfig& cfg, const std::string& file, std::ostream& fallback) : os_(&fallback) {
    if (cfg.out.empty()) return;
    std::filesystem::create_directories(cfg.out);
    const auto p = std::filesystem::path(cfg.out) / file;
    file_ = std::make_unique<std::ofstream>(p, std::ios::binary);
    if (!*file_) throw InputError("cannot write '" + p.string() + "'");
    os_ = file_.get();
  }
  std::ostream& os() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::unique_ptr<std::ofstream> open_figure(const RunConfig& cfg, const std::string& name) {
  std::string path = cfg.figure;
  if (path.empty() && !cfg.out.empty()) path = (std::filesystem::path(cfg.out) / name).string();
  if (path.empty()) return nullptr;
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*f) throw InputError("cannot write '" + path + "'");
  return f;
}

struct Stats {
  double mean = 0.0, sd = 0.0;
  std::size_t n = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  ValidationReport report;
  if (!cfg.model.empty()) {
    ModelPrimitives m = load_model(cfg.model, false);
    report = validate_primitives(m);
    if (report.ok() && !cfg.traj.empty()) {
      const Trajectory tr = load_trajectory(cfg.traj);
      check_trajectory(m, tr);
      forward_filter(m, tr);
    }
  } else {
    const Scenario sc = resolve_scenario(cfg);
    ModelPrimitives m = sc.model;
    report = validate_primitives(m);
  }
  if (report.ok()) {
    out << "ok\n";
    return kOk;
  }
  out << report.summary() << '\n';
  return kInputError;
}

int cmd_posterior(const RunConfig& cfg, std::ostream& out) {
  const Scenario sc = resolve_scenario(cfg);
  const auto cases = resolve_cases(cfg, sc);
  const auto seeds = parse_seeds(cfg.seeds);
  Sink sink(cfg, "posterior.csv", out);
  std::ostream& os = sink.os();
  const bool single = cases.size() == 1 && seeds.size() == 1;
  if (single) {
    write_samples_csv(os, sample_posterior_paths(sc.model, cases[0].traj, cfg.B, seeds[0]));
    return kOk;
  }
  os << "path_label,T,seed,b,t,h\n";
  for (const auto& c : cases)
    for (auto seed : seeds) {
      const auto s = sample_posterior_paths(sc.model, c.traj, cfg.B, seed);
      for (std::size_t b = 0; b < s.B; ++b)
        for (std::size_t t = 0; t < s.T; ++t)
          os << c.label << ',' << s.T << ',' << seed << ',' << b + 1 << ',' << t + 1 << ','
             << s.h(b, t) + 1 << '\n';
    }
  return kOk;
}

struct BoundRow {
  double lb = 0, ub = 0, lb_gap = 0, ub_gap = 0, wall_ms = 0;
  std::string error;
};

int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
  const Scenario sc = resolve_scenario(cfg);
  const auto cases = resolve_cases(cfg, sc);
  const auto seeds = parse_seeds(cfg.seeds);
  std::vector<ConstraintMode> modes;
  for (const auto& s : split(cfg.modes, ',')) modes.push_back(parse_mode(s));
  if (modes.empty()) throw InputError("--modes is empty");
  if (cfg.B == 0) throw InputError("--B must be positive");
  const SolveOptions opts = solve_options(cfg);
  const bool nest = cfg.nest && std::count(modes.begin(), modes.end(), ConstraintMode::base) &&
                    std::count(modes.begin(), modes.end(), ConstraintMode::cs);

  const std::size_t nc = cases.size(), ns = seeds.size(), nm = modes.size();
  std::vector<BoundRow> rows(nc * ns * nm);
  auto fill = [&](BoundRow& r, const Bounds& b, double ms) {
    r.lb = b.lb.value;
    r.ub = b.ub.value;
    r.lb_gap = b.lb.fw_gap;
    r.ub_gap = b.ub.fw_gap;
    r.wall_ms = ms;
  };
  const long long cells = static_cast<long long>(nc * ns);
#pragma omp parallel for schedule(dynamic)
  for (long long cell = 0; cell < cells; ++cell) {
    const std::size_t c = static_cast<std::size_t>(cell) / ns, s = static_cast<std::size_t>(cell) % ns;
    BoundRow* row = &rows[(c * ns + s) * nm];
    std::optional<NestedBounds> nb;
    if (nest) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        nb = nested_bounds(sc, cases[c].traj, cfg.B, seeds[s], opts);
      } catch (const std::exception& e) {
        for (std::size_t k = 0; k < nm; ++k)
          if (modes[k] == ConstraintMode::base || modes[k] == ConstraintMode::cs)
            row[k].error = csv_text(e.what());
      }
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (nb)
        for (std::size_t k = 0; k < nm; ++k) {
          if (modes[k] == ConstraintMode::base) fill(row[k], nb->base, ms);
          if (modes[k] == ConstraintMode::cs) fill(row[k], nb->cs, ms);
        }
    }
    for (std::size_t k = 0; k < nm; ++k) {
      if (nest && (modes[k] == ConstraintMode::base || modes[k] == ConstraintMode::cs)) continue;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const Bounds b = bound_pn(sc, cases[c].traj, cfg.B, seeds[s], modes[k], opts);
        fill(row[k], b, std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count());
      } catch (const std::exception& e) {
        row[k].error = csv_text(e.what());
      }
    }
  }

  Sink sink(cfg, "bounds.csv", out);
  std::ostream& os = sink.os();
  os << "path_label,T,B,seed,mode,lb,ub,lb_fwgap,ub_fwgap,restarts,wall_ms,error\n";
  bool failed = false;
  auto ms_text = [&](double ms) { return cfg.timing ? num(ms) : std::string("0"); };
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t k = 0; k < nm; ++k) {
        const BoundRow& r = rows[(c * ns + s) * nm + k];
        os << cases[c].label << ',' << cases[c].traj.T() << ',' << cfg.B << ',' << seeds[s] << ','
           << to_string(modes[k]) << ',';
        if (r.error.empty()) {
          os << num(r.lb) << ',' << num(r.ub) << ',' << num(r.lb_gap) << ',' << num(r.ub_gap);
        } else {
          failed = true;
          os << ",,,";
        }
        os << ',' << cfg.restarts << ',' << ms_text(r.wall_ms) << ',' << r.error << '\n';
      }

  auto fig = open_figure(cfg, "figure3_bounds.csv");
  if (fig) *fig << "path,T,method,value_lo,value_hi,estimate,sd\n";
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < nm; ++k) {
      std::vector<double> lb, ub, lg, ug, ms;
      std::size_t errors = 0;
      for (std::size_t s = 0; s < ns; ++s) {
        const BoundRow& r = rows[(c * ns + s) * nm + k];
        if (!r.error.empty()) {
          ++errors;
          continue;
        }
        lb.push_back(r.lb);
        ub.push_back(r.ub);
        lg.push_back(r.lb_gap);
        ug.push_back(r.ub_gap);
        ms.push_back(r.wall_ms);
      }
      const Stats L = stats(lb), U = stats(ub), LG = stats(lg), UG = stats(ug), M = stats(ms);
      const std::string err = errors ? "failed=" + std::to_string(errors) : "";
      const std::string head = cases[c].label + ',' + std::to_string(cases[c].traj.T()) + ',' +
                               std::to_string(cfg.B) + ',';
      os << head << "mean," << to_string(modes[k]) << ',' << num(L.mean) << ',' << num(U.mean)
         << ',' << num(LG.mean) << ',' << num(UG.mean) << ',' << cfg.restarts << ','
         << ms_text(M.mean) << ',' << err << '\n';
      os << head << "sd," << to_string(modes[k]) << ',' << num(L.sd) << ',' << num(U.sd) << ','
         << num(LG.sd) << ',' << num(UG.sd) << ',' << cfg.restarts << ',' << ms_text(M.sd) << ','
         << err << '\n';
      if (fig)
        *fig << cases[c].label << ',' << cases[c].traj.T() << ',' << to_string(modes[k]) << ','
             << num(L.mean) << ',' << num(U.mean) << ",," << num(std::max(L.sd, U.sd)) << '\n';
    }
  return failed ? kSolveError : kOk;
}

struct CopulaRow {
  PnEstimate est;
  std::string error;
};

int cmd_copula(const RunConfig& cfg, std::ostream& out) {
  const Scenario sc = resolve_scenario(cfg);
  const auto cases = resolve_cases(cfg, sc);
  const auto seeds = parse_seeds(cfg.seeds);
  const auto methods = split(cfg.copulas, ',');
  for (const auto& m : methods)
    if (m != "independence" && m != "comonotonic" && m != "naive")
      throw InputError("unknown copula '" + m + "' (expected independence, comonotonic or naive)");
  if (cfg.B == 0 || cfg.replicates == 0) throw InputError("--B and --R must be positive");

  const std::size_t nc = cases.size(), ns = seeds.size(), nm = methods.size();
  std::vector<CopulaRow> rows(nc * ns * nm);
  const long long cells = static_cast<long long>(nc * ns);
#pragma omp parallel for schedule(dynamic)
  for (long long cell = 0; cell < cells; ++cell) {
    const std::size_t c = static_cast<std::size_t>(cell) / ns, s = static_cast<std::size_t>(cell) % ns;
    CopulaRow* row = &rows[(c * ns + s) * nm];
    const Trajectory& tr = cases[c].traj;
    std::optional<PosteriorSampleSet> samples;
    for (std::size_t k = 0; k < nm; ++k) {
      try {
        if (methods[k] == "naive") {
          row[k].est =
              estimate_pn_naive(sc.model, tr.x_tilde, cfg.naive_draws, seeds[s], sc.forbidden_state);
          continue;
        }
        if (!samples) samples = sample_posterior_paths(sc.model, tr, cfg.B, seeds[s]);
        const auto cf = methods[k] == "independence"
                            ? simulate_independence(sc.model, tr, *samples, seeds[s], cfg.replicates)
                            : simulate_comonotonic(sc.model, tr, *samples, sc.ranks, seeds[s],
                                                   cfg.replicates);
        row[k].est = estimate_pn_mc(cf, sc.forbidden_state);
      } catch (const std::exception& e) {
        row[k].error = csv_text(e.what());
      }
    }
  }

  Sink sink(cfg, "copula.csv", out);
  std::ostream& os = sink.os();
  os << "path_label,T,B,seed,method,estimate,se,n,error\n";
  bool failed = false;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t k = 0; k < nm; ++k) {
        const CopulaRow& r = rows[(c * ns + s) * nm + k];
        os << cases[c].label << ',' << cases[c].traj.T() << ',' << cfg.B << ',' << seeds[s] << ','
           << methods[k] << ',';
        if (r.error.empty())
          os << num(r.est.value) << ',' << num(r.est.se) << ',' << r.est.n << ",\n";
        else {
          failed = true;
          os << ",,," << r.error << '\n';
        }
      }
  auto fig = open_figure(cfg, "figure3_copula.csv");
  if (fig) *fig << "path,T,method,value_lo,value_hi,estimate,sd\n";
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < nm; ++k) {
      std::vector<double> v;
      for (std::size_t s = 0; s < ns; ++s) {
        const CopulaRow& r = rows[(c * ns + s) * nm + k];
        if (r.error.empty()) v.push_back(r.est.value);
      }
      const Stats st = stats(v);
      const std::string err =
          v.size() < ns ? "failed=" + std::to_string(ns - v.size()) : std::string();
      const std::string head = cases[c].label + ',' + std::to_string(cases[c].traj.T()) + ',' +
                               std::to_string(cfg.B) + ',';
      os << head << "mean," << methods[k] << ',' << num(st.mean) << ",,," << err << '\n';
      os << head << "sd," << methods[k] << ',' << num(st.sd) << ",,," << err << '\n';
      if (fig)
        *fig << cases[c].label << ',' << cases[c].traj.T() << ',' << methods[k] << ",,,"
             << num(st.mean) << ',' << num(st.sd) << '\n';
    }
  return failed ? kSolveError : kOk;
}

void add_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--scenario", cfg.scenario, "built-in scenario (breast-cancer) or scenario file");
  app.add_option("--model", cfg.model, "model or scenario JSON file");
  app.add_option("--traj", cfg.traj, "trajectory JSON file");
  app.add_option("--path", cfg.paths, "built-in path labels, comma separated");
  app.add_option("--T", cfg.T, "horizon, single value or a..b");
  app.add_option("--B", cfg.B, "posterior samples per seed");
  app.add_option("--seeds", cfg.seeds, "seed count (1..N) or list such as 3,7 or 5..9");
  app.add_option("--modes", cfg.modes, "constraint modes: base, cs, pm, cs+pm");
  app.add_option("--copulas", cfg.copulas, "independence, comonotonic, naive");
  app.add_option("--restarts", cfg.restarts, "random restarts per bound");
  app.add_option("--max-iters", cfg.max_iters, "Frank-Wolfe iteration cap");
  app.add_option("--fw-tol", cfg.fw_tol, "Frank-Wolfe gap tolerance");
  app.add_option("--R", cfg.replicates, "copula replicates per posterior sample");
  app.add_option("--naive-draws", cfg.naive_draws, "paths for the naive estimate");
  app.add_option("--in-situ-stay", cfg.in_situ_stay, "built-in model: q24 (q26 = 1 - q24)");
  app.add_flag("--nest,!--no-nest", cfg.nest, "warm-start base and cs from each other");
  app.add_option("--out", cfg.out, "output directory (default: CSV on stdout)");
  app.add_option("--figure", cfg.figure, "tidy plot table file");
  app.add_option("--threads", cfg.threads, "OpenMP threads (0 = runtime default)");
  app.add_flag("--timing", cfg.timing, "report wall_ms (breaks byte-identical output)");
}

}  // namespace

std::vector<std::size_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) return {static_cast<std::size_t>(to_uint(s, "T"))};
  const auto lo = to_uint(s.substr(0, dots), "range"), hi = to_uint(s.substr(dots + 2), "range");
  if (lo > hi) throw InputError("empty range '" + s + "'");
  std::vector<std::size_t> out;
  for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<std::size_t>(v));
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  if (s.find(',') != std::string::npos) {
    for (const auto& item : split(s, ',')) out.push_back(to_uint(item, "seed"));
  } else if (s.find("..") != std::string::npos) {
    for (auto v : parse_range(s)) out.push_back(v);
  } else {
    const auto n = to_uint(s, "seed count");
    for (std::uint64_t k = 1; k <= n; ++k) out.push_back(k);
  }
  if (out.empty()) throw InputError("no seeds given");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds on the probability of necessity in dynamic latent-state models", "cfbounds"};
  app.set_config("--config", "", "TOML/INI file with the same keys as the flags; flags win");
  app.require_subcommand(1);
  RunConfig cfg;
  add_options(app, cfg);
  auto* validate = app.add_subcommand("validate", "check a model file")->fallthrough();
  auto* posterior = app.add_subcommand("posterior", "write posterior hidden-path samples")->fallthrough();
  auto* copula = app.add_subcommand("copula", "copula and naive PN estimates")->fallthrough();
  auto* bounds = app.add_subcommand("bounds", "PN bounds per path, T, seed and mode")->fallthrough();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  try {
    if (validate->parsed()) return cmd_validate(cfg, out);
    if (posterior->parsed()) return cmd_posterior(cfg, out);
    if (copula->parsed()) return cmd_copula(cfg, out);
    if (bounds->parsed()) return cmd_bounds(cfg, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ImpossibleTrajectory& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolveError;
  }
  return kInputError;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

}  // namespace cfb::cli
