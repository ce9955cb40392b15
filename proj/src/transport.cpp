#include "cfbounds/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfb::transport {

namespace {

// Cost with a lexicographic penalty tier for disallowed cells.
struct Cost {
  double big = 0.0;
  double c = 0.0;
};

Cost operator-(Cost a, Cost b) { return {a.big - b.big, a.c - b.c}; }
Cost operator+(Cost a, Cost b) { return {a.big + b.big, a.c + b.c}; }

// Penalty components are small integers, so comparisons on them are exact.
bool negative(Cost d, double eps) { return d.big < -0.5 || (d.big < 0.5 && d.c < -eps); }
bool less(Cost a, Cost b) {
  if (std::abs(a.big - b.big) > 0.5) return a.big < b.big;
  return a.c < b.c;
}

}  // namespace

Solution solve(std::span<const double> supply, std::span<const double> demand,
               std::span<const unsigned char> allowed, std::span<const double> cost) {
  const std::size_t m = supply.size(), n = demand.size();
  if (m == 0 || n == 0 || allowed.size() != m * n || cost.size() != m * n)
    throw std::invalid_argument("transport::solve: inconsistent sizes");

  std::vector<double> a(supply.begin(), supply.end()), b(demand.begin(), demand.end());
  double sa = 0.0, sb = 0.0;
  for (double v : a) sa += v;
  for (double v : b) sb += v;
  for (double& v : b) v *= sa / sb;

  std::vector<Cost> c(m * n);
  double scale = 1.0;
  for (std::size_t k = 0; k < m * n; ++k) {
    c[k] = allowed[k] ? Cost{0.0, cost[k]} : Cost{1.0, 0.0};
    if (allowed[k]) scale = std::max(scale, std::abs(cost[k]));
  }
  const double eps = 1e-12 * scale;

  Solution sol;
  std::vector<double>& x = sol.plan;
  x.assign(m * n, 0.0);
  std::vector<std::size_t> basis;
  std::vector<unsigned char> in_basis(m * n, 0);

  // Northwest corner start; zero entries stay basic to keep a spanning tree.
  {
    std::size_t i = 0, j = 0;
    std::vector<double> ra = a, rb = b;
    for (;;) {
      const double v = std::min(ra[i], rb[j]);
      x[i * n + j] = v;
      basis.push_back(i * n + j);
      in_basis[i * n + j] = 1;
      ra[i] -= v;
      rb[j] -= v;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1)
        ++j;
      else if (j == n - 1 || ra[i] <= rb[j])
        ++i;
      else
        ++j;
    }
  }

  const std::size_t nodes = m + n;
  std::vector<std::vector<std::size_t>> adj(nodes);
  std::vector<Cost> pot(nodes);
  std::vector<unsigned char> seen(nodes);
  std::vector<std::size_t> queue(nodes), parent_cell(nodes);
  std::vector<std::size_t> cycle;
  const int bland_after = static_cast<int>(50 * nodes);
  const int give_up = static_cast<int>(200 * nodes * nodes + 2000);

  auto other = [&](std::size_t cell, std::size_t node) {
    return node < m ? m + cell % n : cell / n;
  };

  for (;;) {
    for (auto& l : adj) l.clear();
    for (std::size_t cell : basis) {
      adj[cell / n].push_back(cell);
      adj[m + cell % n].push_back(cell);
    }
    // Potentials: u_i + v_j = c_ij on the basis tree, u_0 = 0.
    std::fill(seen.begin(), seen.end(), 0);
    std::size_t head = 0, tail = 0;
    queue[tail++] = 0;
    seen[0] = 1;
    pot[0] = {};
    while (head < tail) {
      const std::size_t node = queue[head++];
      for (std::size_t cell : adj[node]) {
        const std::size_t nb = other(cell, node);
        if (seen[nb]) continue;
        seen[nb] = 1;
        pot[nb] = c[cell] - pot[node];
        queue[tail++] = nb;
      }
    }

    std::size_t enter = m * n;
    Cost best{};
    const bool bland = sol.iterations >= bland_after;
    for (std::size_t k = 0; k < m * n; ++k) {
      if (in_basis[k]) continue;
      const Cost d = c[k] - (pot[k / n] + pot[m + k % n]);
      if (!negative(d, eps)) continue;
      if (enter == m * n || less(d, best)) {
        enter = k;
        best = d;
      }
      if (bland) break;
    }
    if (enter == m * n) break;
    if (++sol.iterations > give_up)
      throw std::runtime_error("transport::solve: iteration limit reached");

    // Tree path from the entering column back to the entering row.
    const std::size_t ie = enter / n, je_node = m + enter % n;
    std::fill(seen.begin(), seen.end(), 0);
    head = tail = 0;
    queue[tail++] = ie;
    seen[ie] = 1;
    while (head < tail && !seen[je_node]) {
      const std::size_t node = queue[head++];
      for (std::size_t cell : adj[node]) {
        const std::size_t nb = other(cell, node);
        if (seen[nb]) continue;
        seen[nb] = 1;
        parent_cell[nb] = cell;
        queue[tail++] = nb;
      }
    }
    cycle.clear();
    for (std::size_t node = je_node; node != ie;) {
      const std::size_t cell = parent_cell[node];
      cycle.push_back(cell);
      node = other(cell, node);
    }
    // cycle[0] touches the entering column and loses mass, then signs alternate.
    std::size_t leave = m * n;
    double theta = 0.0;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const std::size_t cell = cycle[k];
      if (leave == m * n || x[cell] < theta || (x[cell] == theta && cell < leave)) {
        leave = cell;
        theta = x[cell];
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) x[cycle[k]] += (k % 2 == 0 ? -theta : theta);
    x[enter] = theta;
    x[leave] = 0.0;
    in_basis[leave] = 0;
    in_basis[enter] = 1;
    *std::find(basis.begin(), basis.end(), leave) = enter;
  }

  for (std::size_t k = 0; k < m * n; ++k) {
    if (x[k] < 0.0) x[k] = 0.0;
    if (!allowed[k]) sol.blocked_mass += x[k];
  }
  return sol;
}

}  // namespace cfb::transport
