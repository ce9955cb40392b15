#include "cfbounds/ranks.hpp"

#include <numeric>

#include "cfbounds/errors.hpp"

namespace cfb {

namespace {

std::vector<int> invert(const std::vector<int>& order, std::size_t n, const char* what) {
  if (order.size() != n)
    throw InputError(std::string(what) + " ranking must list all " + std::to_string(n) +
                     " values");
  std::vector<int> rank(n, -1);
  for (std::size_t r = 0; r < n; ++r) {
    const int v = order[r];
    if (v < 0 || static_cast<std::size_t>(v) >= n || rank[v] != -1)
      throw InputError(std::string(what) + " ranking is not a permutation");
    rank[v] = static_cast<int>(r);
  }
  return rank;
}

}  // namespace

RankOrdering::RankOrdering(const ModelPrimitives& m, std::vector<int> state_order,
                           std::vector<int> emission_order)
    : H_(m.H()),
      O_(m.O()),
      X_(m.X()),
      state_order_(std::move(state_order)),
      emission_order_(std::move(emission_order)),
      E_(m.E),
      Q_(m.Q) {
  state_rank_ = invert(state_order_, H_, "state");
  emission_rank_ = invert(emission_order_, O_, "emission");
  Ehat_.assign(H_ * X_ * O_, 0.0);
  for (std::size_t h = 0; h < H_; ++h)
    for (std::size_t x = 0; x < X_; ++x) {
      double acc = 0.0;
      for (std::size_t r = 0; r < O_; ++r) {
        acc += m.e(h, x, emission_order_[r]);
        Ehat_[(h * X_ + x) * O_ + r] = acc;
      }
    }
  Qhat_.assign(H_ * O_ * H_, 0.0);
  for (std::size_t h = 0; h < H_; ++h)
    for (std::size_t i = 0; i < O_; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < H_; ++r) {
        acc += m.q(h, i, state_order_[r]);
        Qhat_[(h * O_ + i) * H_ + r] = acc;
      }
    }
}

RankOrdering RankOrdering::identity(const ModelPrimitives& m) {
  std::vector<int> s(m.H()), o(m.O());
  std::iota(s.begin(), s.end(), 0);
  std::iota(o.begin(), o.end(), 0);
  return RankOrdering(m, std::move(s), std::move(o));
}

double RankOrdering::emission_cdf(int h, int x, int r) const {
  return r < 0 ? 0.0 : Ehat_[(h * X_ + x) * O_ + r];
}

double RankOrdering::transition_cdf(int h, int i, int r) const {
  return r < 0 ? 0.0 : Qhat_[(h * O_ + i) * H_ + r];
}

std::pair<double, double> RankOrdering::emission_interval(int h, int x, int i) const {
  const int r = emission_rank_[i];
  return {emission_cdf(h, x, r - 1), emission_cdf(h, x, r)};
}

std::pair<double, double> RankOrdering::transition_interval(int h, int i, int h2) const {
  const int r = state_rank_[h2];
  return {transition_cdf(h, i, r - 1), transition_cdf(h, i, r)};
}

int RankOrdering::emission_inverse(int h, int x, double u) const {
  int last = -1;
  for (std::size_t r = 0; r < O_; ++r) {
    const int i = emission_order_[r];
    if (E_[(h * X_ + x) * O_ + i] <= 0.0) continue;
    last = i;
    if (u < Ehat_[(h * X_ + x) * O_ + r]) return i;
  }
  return last;
}

int RankOrdering::transition_inverse(int h, int i, double u) const {
  int last = -1;
  for (std::size_t r = 0; r < H_; ++r) {
    const int h2 = state_order_[r];
    if (Q_[(h * O_ + i) * H_ + h2] <= 0.0) continue;
    last = h2;
    if (u < Qhat_[(h * O_ + i) * H_ + r]) return h2;
  }
  return last;
}

}  // namespace cfb
