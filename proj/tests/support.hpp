#pragma once

// Test-only games and reference values. Nothing here calls into the library's
// LQ formulas, so tests that compare against it are independent checks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/random.hpp"
#include "dgame/value_grid.hpp"

namespace dgame::test {

inline Box box1(double lo, double hi) { return Box{{lo}, {hi}}; }

// x' = -a x (controls ignored), f = -x^2, on [-x_max, x_max] with u in [-1, 1].
inline GameDefinition pure_decay(double a, double rho, double x_max = 2.0) {
  GameDefinition g;
  g.name = "pure_decay";
  g.n_players = 1;
  g.state_dim = 1;
  g.control_dims = {1};
  g.state_domain = box1(-x_max, x_max);
  g.control_sets = {box1(-1.0, 1.0)};
  g.dynamics = [a](std::span<const double> x, std::span<const double>, std::span<double> v) {
    v[0] = -a * x[0];
  };
  g.payoffs = {[](std::span<const double> x, std::span<const double>) { return -x[0] * x[0]; }};
  g.discount_rate = rho;
  return g;
}

// Two players steering a 2-D state: x' = (u_1, u_2) - 0.5 x, f_i = -(|x|^2 + u_i^2) + c_i x_i.
inline GameDefinition planar_game(double rho) {
  GameDefinition g;
  g.name = "planar";
  g.n_players = 2;
  g.state_dim = 2;
  g.control_dims = {1, 1};
  g.state_domain = Box{{-1.0, -1.0}, {1.0, 1.0}};
  g.control_sets = {box1(-1.0, 1.0), box1(-1.0, 1.0)};
  g.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> v) {
    v[0] = u[0] - 0.5 * x[0];
    v[1] = u[1] - 0.5 * x[1];
  };
  for (int i = 0; i < 2; ++i)
    g.payoffs.push_back([i](std::span<const double> x, std::span<const double> u) {
      return -(x[0] * x[0] + x[1] * x[1] + u[i] * u[i]) + 0.3 * x[i];
    });
  g.discount_rate = rho;
  return g;
}

// Dynamics that return NaN once the state passes `trigger`.
inline GameDefinition nan_game(double trigger) {
  GameDefinition g;
  g.name = "nan";
  g.n_players = 1;
  g.state_dim = 1;
  g.control_dims = {1};
  g.state_domain = box1(-10.0, 10.0);
  g.control_sets = {box1(-1.0, 1.0)};
  g.dynamics = [trigger](std::span<const double> x, std::span<const double>, std::span<double> v) {
    v[0] = x[0] > trigger ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  g.payoffs = {[](std::span<const double>, std::span<const double>) { return 0.0; }};
  g.discount_rate = 1.0;
  return g;
}

// Random increasing axis on [lo, hi] with `nodes` entries (non-uniform).
inline Vec random_axis(Rng& rng, double lo, double hi, int nodes) {
  Vec a(nodes);
  a[0] = lo;
  double acc = 0.0;
  Vec gaps(nodes - 1);
  for (auto& g : gaps) acc += (g = rng.uniform(0.2, 1.0));
  double pos = lo;
  for (int k = 1; k < nodes; ++k) a[k] = (pos += (hi - lo) * gaps[k - 1] / acc);
  a.back() = hi;
  return a;
}

inline Vec random_values(Rng& rng, std::size_t n, double lo, double hi) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// ---------------------------------------------------------------------------
// Riccati references, written out from the quadratic ansatz V = -p x^2.

// Continuous one-player LQ: (b^2/r) p^2 + (rho - 2a) p - q = 0, positive root.
inline double lq_p(double a, double b, double q, double r, double rho) {
  const double A = b * b / r, B = rho - 2.0 * a;
  return (-B + std::sqrt(B * B + 4.0 * A * q)) / (2.0 * A);
}

// Continuous symmetric N-player game x' = sum u_j, f_i = -(x^2 + u_i^2):
// (2N - 1) p^2 + rho p - 1 = 0.
inline double symmetric_p(int n, double rho) {
  const double A = 2.0 * n - 1.0;
  return (-rho + std::sqrt(rho * rho + 4.0 * A)) / (2.0 * A);
}

struct DiscreteRiccati {
  double p;  // V_h(x) = -p x^2
  double k;  // phi_h(x) = -k x
};

// Exact discrete-game solution for the symmetric game (no grid, no lattice),
// by fixed-point iteration on
//   k = beta p (1 - h (N-1) k) / (1 + beta p h),  p = h (1 + k^2) + beta p (1 - h N k)^2.
inline DiscreteRiccati discrete_symmetric(int n, double rho, double h) {
  const double beta = 1.0 - rho * h;
  double p = 0.5, k = 0.5;
  for (int it = 0; it < 200000; ++it) {
    const double k_next = beta * p * (1.0 - h * (n - 1) * k) / (1.0 + beta * p * h);
    const double p_next = h * (1.0 + k_next * k_next) + beta * p * std::pow(1.0 - h * n * k_next, 2);
    if (std::abs(p_next - p) < 1e-15 && std::abs(k_next - k) < 1e-15) return {p_next, k_next};
    p = p_next;
    k = k_next;
  }
  return {p, k};
}

// Discrete one-player LQ regulator x+ = x + h (a x + b u).
inline DiscreteRiccati discrete_one_player(double a, double b, double q, double r, double rho,
                                           double h) {
  const double beta = 1.0 - rho * h;
  double p = 0.5;
  double k = 0.0;
  for (int it = 0; it < 200000; ++it) {
    k = beta * p * b * (1.0 + h * a) / (r + beta * p * h * b * b);
    const double m = 1.0 + h * a - h * b * k;
    const double p_next = h * (q + r * k * k) + beta * p * m * m;
    if (std::abs(p_next - p) < 1e-15) return {p_next, k};
    p = p_next;
  }
  return {p, k};
}

// Discrete payoff of the linear closed loop x+ = m x with running payoff
// -w x^2: -h w x0^2 / (1 - beta m^2), summed by brute force.
inline double brute_geometric_quadratic(double h, double beta, double m, double w, double x0) {
  double sum = 0.0, x = x0, disc = 1.0;
  for (int n = 0; n < 2000000 && disc > 1e-300; ++n) {
    sum += h * disc * (-w * x * x);
    x *= m;
    disc *= beta;
    if (std::abs(disc * x * x) < 1e-25) break;
  }
  return sum;
}

}  // namespace dgame::test
