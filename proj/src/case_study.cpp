#include "cfbounds/case_study.hpp"

#include <numeric>

#include "cfbounds/errors.hpp"

namespace cfb::cancer {

namespace {

// Write helpers take 1-based indices as in the calibration tables.
void setq(ModelPrimitives& m, int h, int i, int h2, double v) { m.q(h - 1, i - 1, h2 - 1) = v; }
void sete(ModelPrimitives& m, int h, int x, int i, double v) { m.e(h - 1, x, i - 1) = v; }

struct Bullet {
  int h;
  std::vector<int> i;
  int h_next;
  std::vector<int> h_cf;
  std::vector<int> i_cf;
  std::vector<int> h_next_cf;
};

const std::vector<int> kAll{1, 2, 3, 4, 5, 6, 7};
const std::vector<int> kUndetected{1, 2, 3};

}  // namespace

Scenario breast_cancer_model(const Options& opts) {
  ModelPrimitives m = make_model(7, 7, 2);

  const double prevalence = 0.010183;
  m.p[0] = 1.0 - prevalence;
  m.p[1] = 0.2 * prevalence;
  m.p[2] = 0.8 * prevalence;

  const double q12 = 0.5 * 33.0 / 100000.0, q13 = 0.5 * 128.5 / 100000.0;
  const double q11 = 1.0 - q12 - q13;
  const double q27 = 0.0, q23 = q13, q22 = 1.0 - q23 - q27;
  const double q24 = opts.in_situ_stay, q25 = 0.0, q26 = 1.0 - q24, q27_bar = 0.0;
  const double q37 = 0.1554, q33 = 1.0 - q37;
  const double q36 = 0.0459, q37_bar = 0.0113, q35 = 1.0 - q36 - q37_bar;

  for (int i : {1, 2, 3}) {
    setq(m, 1, i, 1, q11);
    setq(m, 1, i, 2, q12);
    setq(m, 1, i, 3, q13);
  }
  for (int i : {1, 2}) {
    setq(m, 2, i, 2, q22);
    setq(m, 2, i, 3, q23);
    setq(m, 2, i, 7, q27);
    setq(m, 3, i, 3, q33);
    setq(m, 3, i, 7, q37);
  }
  // Detected rows; diagnosed states keep the detected dynamics.
  for (auto [h, i] : {std::pair{2, 4}, std::pair{4, 1}, std::pair{4, 4}}) {
    setq(m, h, i, 4, q24);
    setq(m, h, i, 5, q25);
    setq(m, h, i, 6, q26);
    setq(m, h, i, 7, q27_bar);
  }
  for (auto [h, i] : {std::pair{3, 5}, std::pair{5, 1}, std::pair{5, 5}}) {
    setq(m, h, i, 5, q35);
    setq(m, h, i, 6, q36);
    setq(m, h, i, 7, q37_bar);
  }
  setq(m, 6, 1, 6, 1.0);
  setq(m, 6, 6, 6, 1.0);
  setq(m, 7, 1, 7, 1.0);
  setq(m, 7, 7, 7, 1.0);

  const double e12 = 0.9, e24 = 0.8, e35 = e24;
  sete(m, 1, 0, 2, e12);
  sete(m, 1, 0, 3, 1.0 - e12);
  sete(m, 2, 0, 2, 1.0 - e24);
  sete(m, 2, 0, 4, e24);
  sete(m, 3, 0, 2, 1.0 - e35);
  sete(m, 3, 0, 5, e35);
  for (int h = 4; h <= 7; ++h) {
    sete(m, h, 0, h, 1.0);
    sete(m, h, 1, h, 1.0);
  }
  for (int h = 1; h <= 3; ++h) sete(m, h, 1, 1, 1.0);

  const auto report = validate_primitives(m);
  if (!report.ok()) throw StructuralError("cancer model invalid:\n" + report.summary());

  Scenario sc;
  sc.name = "breast-cancer";
  sc.model = m;
  sc.forbidden_state = kDeath;
  sc.ranks = breast_cancer_ranks(sc.model, opts.emission_order);
  sc.pm_zeros = pm_zero_list();
  sc.state_labels = {"healthy",           "in-situ undiagnosed", "invasive undiagnosed",
                     "in-situ diagnosed", "invasive diagnosed",  "recovered",
                     "death"};
  sc.emission_labels = {"no screening",     "negative",           "false positive",
                        "in-situ detected", "invasive detected",  "recovered",
                        "death"};
  return sc;
}

Trajectory make_path(const std::string& label, std::size_t T) {
  if (label != "path1" && label != "path2")
    throw InputError("unknown path '" + label + "' (expected path1 or path2)");
  if (T < 4) throw InputError("paths need T >= 4");
  Trajectory tr;
  tr.o.assign(T, 0);  // emission 1
  tr.x.assign(T, 1);
  tr.x_tilde.assign(T, 0);
  tr.o[0] = 1;  // negative screening
  tr.x[0] = 0;
  tr.o[T - 1] = 6;  // death
  tr.x[T - 1] = 0;
  if (label == "path2") {
    tr.o[T - 2] = 4;  // invasive detected
    tr.x[T - 2] = 0;
  }
  return tr;
}

std::vector<TransitionZero> pm_zero_list() {
  // (h, i, h', h~, i~, h~') with 1-based values, expanded below.
  const std::vector<Bullet> bullets{
      {1, kAll, 1, {1}, kAll, {2, 3, 4, 5, 7}},
      {1, kAll, 2, {1}, kAll, {1, 3, 5, 7}},
      {1, kAll, 3, {1}, kAll, {1, 2, 4, 7}},
      {1, kAll, 7, {1}, kAll, {1, 2, 3, 4, 5}},

      {2, kUndetected, 2, {1, 2, 4}, kAll, {3, 5, 7}},
      {2, {4}, 4, {2, 4}, {4}, {3, 5, 7}},
      {2, kUndetected, 3, {1, 2, 4}, kAll, {7}},
      {2, {4}, 5, {2, 4}, {4}, {7}},
      {2, {4}, 6, {2, 4}, {4}, {2, 3, 4, 5, 7}},
      {2, kUndetected, 7, {2}, kUndetected, {2, 3, 4, 5, 6}},
      {2, {4}, 7, {2, 4}, {4}, {2, 3, 4, 5, 6}},

      {3, kUndetected, 3, {1, 2, 3, 4, 5}, kAll, {7}},
      {3, {5}, 5, {3, 5}, {5}, {7}},
      {3, {5}, 6, {3, 5}, {5}, {3, 5, 7}},
      {3, kUndetected, 7, {3, 5}, kUndetected, {3, 5, 6}},
      {3, {5}, 7, {3, 5}, {5}, {3, 5, 6}},

      {4, {4}, 4, {2, 4}, {4}, {5, 6, 7}},
      {4, {4}, 5, {2, 4}, {4}, {4, 6, 7}},
      {4, {4}, 6, {2, 4}, {4}, {4, 5, 7}},
      {4, {4}, 7, {2, 4}, {4}, {4, 5, 6}},

      {5, {5}, 5, {3, 5}, {5}, {6, 7}},
      {5, {5}, 6, {3, 5}, {5}, {5, 7}},
      {5, {5}, 7, {3, 5}, {5}, {5, 6}},
  };
  std::vector<TransitionZero> out;
  for (const auto& b : bullets)
    for (int i : b.i)
      for (int hc : b.h_cf)
        for (int ic : b.i_cf)
          for (int hn : b.h_next_cf)
            out.push_back({b.h - 1, i - 1, b.h_next - 1, hc - 1, ic - 1, hn - 1});
  return out;
}

RankOrdering breast_cancer_ranks(const ModelPrimitives& m, std::vector<int> emission_order) {
  if (emission_order.empty()) {
    emission_order.resize(m.O());
    std::iota(emission_order.begin(), emission_order.end(), 0);
  }
  return RankOrdering(m, {0, 5, 3, 1, 4, 2, 6}, std::move(emission_order));
}

}  // namespace cfb::cancer
