#include <doctest.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "cfbounds/case_study.hpp"
#include "cfbounds/errors.hpp"
#include "cfbounds/optimizer.hpp"

using namespace cfb;

namespace {

auto key(const TransitionZero& z) {
  return std::tuple(z.h, z.i, z.h_next, z.h_cf, z.i_cf, z.h_next_cf);
}

}  // namespace

TEST_CASE("calibrated entries") {
  const auto m = cancer::breast_cancer_model().model;
  // 1-based (h, i, h') -> 0-based
  for (int i : {0, 1}) CHECK(m.q(2, i, 6) == 0.1554);
  CHECK_FALSE(m.supported(2, 2));  // a negative biopsy rules out cancer
  CHECK(m.q(2, 4, 6) == 0.0113);
  CHECK(m.q(4, 4, 6) == 0.0113);
  CHECK(m.q(4, 4, 5) == 0.0459);
  CHECK(m.q(0, 0, 1) == doctest::Approx(0.5 * 33.0 / 1e5));
  CHECK(m.p[0] == doctest::Approx(1 - 0.010183));
  for (std::size_t h = 0; h < 7; ++h)
    for (std::size_t i = 0; i < 7; ++i)
      if (!m.supported(h, i))
        for (std::size_t x = 0; x < 2; ++x) CHECK(m.e(h, x, i) == 0.0);
}

TEST_CASE("built-in paths") {
  const auto p1 = cancer::make_path("path1", 4);
  CHECK(p1.o == std::vector<int>{1, 0, 0, 6});
  CHECK(p1.x == std::vector<int>{0, 1, 1, 0});
  CHECK(p1.x_tilde == std::vector<int>{0, 0, 0, 0});
  const auto p2 = cancer::make_path("path2", 5);
  CHECK(p2.o == std::vector<int>{1, 0, 0, 4, 6});
  CHECK(p2.x == std::vector<int>{0, 1, 1, 0, 0});
  CHECK_THROWS_AS(cancer::make_path("path1", 3), InputError);
  CHECK_THROWS_AS(cancer::make_path("path3", 5), InputError);
}

TEST_CASE("monotonicity zero list") {
  const auto zeros = cancer::pm_zero_list();
  CHECK(zeros.size() == 1416);
  std::set<std::tuple<int, int, int, int, int, int>> all;
  for (const auto& z : zeros) all.insert(key(z));
  CHECK(all.size() == zeros.size());
  for (int i : {0, 1})
    for (int hc : {1, 3})
      for (int hn : {4, 6}) CHECK(all.count({1, i, 1, hc, 3, hn}) == 1);
  for (const auto& z : zeros) CHECK(z.h != cancer::kDeath);
  std::size_t per_state[7] = {};
  for (const auto& z : zeros) ++per_state[z.h];
  CHECK(per_state[0] == 882);
  CHECK(per_state[1] == 325);
  CHECK(per_state[2] == 173);
  CHECK(per_state[3] == 24);
  CHECK(per_state[4] == 12);
  CHECK(per_state[5] == 0);
}

TEST_CASE("state ranking") {
  const auto sc = cancer::breast_cancer_model();
  CHECK(sc.ranks.state_rank(5) == 1);      // state 6 ranks second
  CHECK(sc.ranks.state_order()[1] == 5);   // and the second rank is state 6
  for (int i : {0, 1}) {
    double prev = 0.0;
    for (int r = 0; r < 7; ++r) {
      const double c = sc.ranks.transition_cdf(2, i, r);
      CHECK(c >= prev);
      prev = c;
    }
    CHECK(prev == doctest::Approx(1.0));
  }
  const RankOrdering alt(sc.model, {0, 5, 3, 4, 1, 2, 6}, sc.ranks.emission_order());
  for (int h = 0; h < 7; ++h)
    for (int i = 0; i < 7; ++i) {
      if (!sc.model.supported(h, i)) continue;
      for (int h2 = 0; h2 < 7; ++h2) {
        if (sc.model.q(h, i, h2) == 0.0) continue;
        const auto a = sc.ranks.transition_interval(h, i, h2), b = alt.transition_interval(h, i, h2);
        CHECK(a.first == doctest::Approx(b.first).epsilon(1e-15));
        CHECK(a.second == doctest::Approx(b.second).epsilon(1e-15));
      }
    }
}

TEST_CASE("monotonicity zeros land on path blocks") {
  const auto sc = cancer::breast_cancer_model();
  const Trajectory tr = cancer::make_path("path1", 6);
  const auto s = sample_posterior_paths(sc.model, tr, 100, 1);
  auto blocks = enumerate_blocks(sc.model, needed_pairs(sc.model, tr, s));
  CHECK(add_transition_zeros(blocks, sc.model, sc.pm_zeros) > 0);
}

TEST_CASE("bounds do not depend on the in-situ split") {
  cancer::Options a, b;
  b.in_situ_stay = 0.3;
  const auto sa = cancer::breast_cancer_model(a), sb = cancer::breast_cancer_model(b);
  SolveOptions o;
  o.restarts = 5;
  for (auto mode : {ConstraintMode::base, ConstraintMode::pm}) {
    const Trajectory tr = cancer::make_path("path1", 6);
    const auto ra = bound_pn(sa, tr, 100, 4, mode, o), rb = bound_pn(sb, tr, 100, 4, mode, o);
    CHECK(ra.samples == rb.samples);
    CHECK(ra.lb.value == doctest::Approx(rb.lb.value).epsilon(1e-6));
    CHECK(ra.ub.value == doctest::Approx(rb.ub.value).epsilon(1e-6));
  }
}
