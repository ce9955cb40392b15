#include "cfbounds/model.hpp"

#include <cmath>
#include <sstream>

#include "cfbounds/errors.hpp"

namespace cfb {

ModelPrimitives make_model(std::size_t states, std::size_t emissions, std::size_t actions) {
  ModelPrimitives m;
  m.num_states = states;
  m.num_emissions = emissions;
  m.num_actions = actions;
  m.p.assign(states, 0.0);
  m.E.assign(states * actions * emissions, 0.0);
  m.Q.assign(states * emissions * states, 0.0);
  m.transition_support.assign(states * emissions, 0);
  return m;
}

namespace {

std::string coords(const std::vector<std::size_t>& idx) {
  if (idx.empty()) return {};
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? "," : "") << idx[k] + 1;
  os << ']';
  return os.str();
}

void add(ValidationReport& r, std::string field, std::vector<std::size_t> idx, double dev,
         const std::string& what) {
  std::ostringstream os;
  os << field << coords(idx) << ' ' << what;
  r.violations.push_back({std::move(field), std::move(idx), dev, os.str()});
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.message << '\n';
  return os.str();
}

ValidationReport validate_primitives(ModelPrimitives& m) {
  const std::size_t H = m.num_states, O = m.num_emissions, X = m.num_actions;
  if (H == 0 || O == 0 || X == 0) throw StructuralError("model sizes must be positive");
  if (m.p.size() != H)
    throw StructuralError("p has length " + std::to_string(m.p.size()) + ", expected " +
                          std::to_string(H));
  if (m.E.size() != H * X * O)
    throw StructuralError("E has " + std::to_string(m.E.size()) + " entries, expected " +
                          std::to_string(H * X * O));
  if (m.Q.size() != H * O * H)
    throw StructuralError("Q has " + std::to_string(m.Q.size()) + " entries, expected " +
                          std::to_string(H * O * H));

  ValidationReport r;
  auto check_entries = [&](const std::string& field, std::span<const double> v,
                           auto&& index_of) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!std::isfinite(v[k]))
        add(r, field, index_of(k), v[k], "is not finite");
      else if (v[k] < 0.0)
        add(r, field, index_of(k), v[k], "is negative (" + std::to_string(v[k]) + ")");
    }
  };
  check_entries("p", m.p, [](std::size_t k) { return std::vector<std::size_t>{k}; });
  check_entries("E", m.E, [&](std::size_t k) {
    return std::vector<std::size_t>{k / (X * O), (k / O) % X, k % O};
  });
  check_entries("Q", m.Q, [&](std::size_t k) {
    return std::vector<std::size_t>{k / (O * H), (k / H) % O, k % H};
  });

  auto sum = [](std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s;
  };
  const double sp = sum(m.p);
  if (std::abs(sp - 1.0) > kStochasticTol) {
    std::ostringstream os;
    os << "sums to " << sp;
    add(r, "p", {}, sp - 1.0, os.str());
  }
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t x = 0; x < X; ++x) {
      const double s = sum(m.emission_row(h, x));
      if (std::abs(s - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "row sums to " << s;
        add(r, "E", {h, x}, s - 1.0, os.str());
      }
    }
  m.transition_support.assign(H * O, 0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < O; ++i) {
      const auto row = m.transition_row(h, i);
      bool any = false;
      for (double a : row) any = any || a != 0.0;
      if (!any) continue;
      m.transition_support[h * O + i] = 1;
      const double s = sum(row);
      if (std::abs(s - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "row sums to " << s;
        add(r, "Q", {h, i}, s - 1.0, os.str());
      }
    }
  // An emission that can occur must lead somewhere.
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t i = 0; i < O; ++i)
        if (m.e(h, x, i) > 0.0 && !m.supported(h, i))
          add(r, "E", {h, x, i}, m.e(h, x, i),
              "is positive but transition row Q[" + std::to_string(h + 1) + "," +
                  std::to_string(i + 1) + "] is empty");
  return r;
}

void check_trajectory(const ModelPrimitives& m, const Trajectory& traj) {
  const std::size_t T = traj.T();
  if (T == 0) throw InputError("trajectory is empty");
  if (traj.x.size() != T || traj.x_tilde.size() != T)
    throw InputError("trajectory arrays o, x, x_tilde must all have length T=" +
                     std::to_string(T));
  for (std::size_t t = 0; t < T; ++t) {
    auto bad = [&](const char* name, int v, std::size_t n) {
      return InputError(std::string(name) + "[" + std::to_string(t + 1) + "] = " +
                        std::to_string(v + 1) + " is outside 1.." + std::to_string(n));
    };
    if (traj.o[t] < 0 || static_cast<std::size_t>(traj.o[t]) >= m.O())
      throw bad("o", traj.o[t], m.O());
    if (traj.x[t] < 0 || static_cast<std::size_t>(traj.x[t]) >= m.X())
      throw bad("x", traj.x[t], m.X());
    if (traj.x_tilde[t] < 0 || static_cast<std::size_t>(traj.x_tilde[t]) >= m.X())
      throw bad("x_tilde", traj.x_tilde[t], m.X());
  }
}

}  // namespace cfb
