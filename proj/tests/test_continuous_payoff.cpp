#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "dgame/continuous_payoff.hpp"
#include "dgame/errors.hpp"
#include "dgame/games.hpp"
#include "support.hpp"

using namespace dgame;

namespace {

std::vector<StrategyField> constant_profile(const GameDefinition& g, const Grid& grid, double u) {
  std::vector<StrategyField> s;
  for (int i = 0; i < g.n_players; ++i) s.push_back(StrategyField::constant(grid, g.control_sets[i], Vec{u}));
  return s;
}

double end_state(const ContinuousTrajectory& t) { return t.states.back()[0]; }

}  // namespace

TEST_CASE("integrate_closed_loop examples") {
  SUBCASE("frozen state") {
    const GameDefinition z = zero_dynamics(1.0, 1.0, 2);
    const Grid grid = Grid::uniform(z.state_domain, std::vector<int>{5});
    const auto s = constant_profile(z, grid, 0.5);
    const ContinuousTrajectory t = integrate_closed_loop(z, s, Vec{0.7}, 2.0, 0.1);
    CHECK(t.times.size() == 21);
    for (const auto& x : t.states) CHECK(x[0] == 0.7);
  }
  SUBCASE("exponential decay") {
    const GameDefinition d = decay(1.0, 4.0);
    const Grid grid = Grid::uniform(d.state_domain, std::vector<int>{5});
    const auto s = constant_profile(d, grid, 0.0);
    const ContinuousTrajectory t = integrate_closed_loop(d, s, Vec{1.0}, 1.0, 1e-3);
    CHECK(t.times.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(end_state(t) - std::exp(-1.0)) <= 1e-8);
    for (std::size_t k = 1; k < t.times.size(); ++k)
      CHECK(t.times[k] - t.times[k - 1] == doctest::Approx(1e-3).epsilon(1e-9));
  }
  SUBCASE("linear feedback") {
    const GameDefinition lq = lq_one_player(0.0, 1.0, 1.0, 1.0, 1.0);
    const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{11});
    const double p = test::lq_p(0.0, 1.0, 1.0, 1.0, 1.0);
    const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], p)};
    const ContinuousTrajectory t = integrate_closed_loop(lq, s, Vec{1.5}, 3.0, 0.01);
    for (std::size_t k = 0; k < t.times.size(); ++k)
      CHECK(std::abs(t.states[k][0] - 1.5 * std::exp(-p * t.times[k])) <= 1e-9);
  }
  SUBCASE("divergence") {
    const GameDefinition g = test::nan_game(0.25);
    const Grid grid = Grid::uniform(g.state_domain, std::vector<int>{3});
    const auto s = constant_profile(g, grid, 0.0);
    CHECK_THROWS_AS(integrate_closed_loop(g, s, Vec{0.0}, 2.0, 0.01), DivergenceError);
  }
  SUBCASE("preconditions") {
    const GameDefinition d = decay(1.0, 4.0);
    const Grid grid = Grid::uniform(d.state_domain, std::vector<int>{5});
    const auto s = constant_profile(d, grid, 0.0);
    CHECK_THROWS_AS(integrate_closed_loop(d, s, Vec{1.0}, 1.0, 0.0), InvalidInput);
    CHECK_THROWS_AS(integrate_closed_loop(d, s, Vec{1.0}, 0.01, 0.1), InvalidInput);
    CHECK_THROWS_AS(integrate_closed_loop(d, s, Vec{3.0}, 1.0, 0.1), InvalidInput);
  }
}

TEST_CASE("RK4 self-convergence") {
  const GameDefinition lq = lq_one_player(0.5, 1.0, 1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{9});
  const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], 1.6)};
  for (double dt : {0.2, 0.1}) {
    // |1.6 x| stays inside the control box, so the closed loop is linear.
    const double ref = end_state(integrate_closed_loop(lq, s, Vec{0.9}, 2.0, dt / 4));
    const double e1 = std::abs(end_state(integrate_closed_loop(lq, s, Vec{0.9}, 2.0, dt)) - ref);
    const double e2 = std::abs(end_state(integrate_closed_loop(lq, s, Vec{0.9}, 2.0, dt / 2)) - ref);
    const double factor = e1 / e2;
    CHECK(factor >= 8.0);
    CHECK(factor <= 32.0);
  }
}

TEST_CASE("RK4 error against the exact closed loop scales like dt^4") {
  // x' = -1.1 x; C pinned from the dt = 0.2 run with a factor 2 of headroom.
  const GameDefinition lq = lq_one_player(0.0, 1.0, 1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{5});
  const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], 1.1)};
  const double c = 1.0e-2;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    const ContinuousTrajectory t = integrate_closed_loop(lq, s, Vec{0.9}, 4.0, dt);
    double err = 0.0;
    for (std::size_t k = 0; k < t.times.size(); ++k)
      err = std::max(err, std::abs(t.states[k][0] - 0.9 * std::exp(-1.1 * t.times[k])));
    CHECK(err <= c * std::pow(dt, 4));
  }
}

TEST_CASE("continuous_payoff examples") {
  SUBCASE("constant payoff") {
    const GameDefinition c = constant_payoff(2.0, 0.5);
    const Grid grid = Grid::uniform(c.state_domain, std::vector<int>{5});
    const auto s = constant_profile(c, grid, 0.3);
    const PayoffEstimate e = continuous_payoff(c, 0, s, Vec{0.0}, 1e-8, 0.01);
    CHECK(std::abs(e.value - 4.0) <= 1e-8);
    CHECK(e.error_bound <= 1e-8);
  }
  SUBCASE("frozen state") {
    const GameDefinition z = zero_dynamics(1.3, 0.7);
    const Grid grid = Grid::uniform(z.state_domain, std::vector<int>{5});
    const auto s = constant_profile(z, grid, 0.0);
    const PayoffEstimate e = continuous_payoff(z, 0, s, Vec{-1.2}, 1e-9, 0.01);
    CHECK(std::abs(e.value - (-1.3 * 1.44 / 0.7)) <= 1e-9);
  }
  SUBCASE("LQ equilibrium value") {
    const GameDefinition lq = lq_one_player(0.0, 1.0, 1.0, 1.0, 1.0);
    const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{41});
    const double p = test::lq_p(0.0, 1.0, 1.0, 1.0, 1.0);
    const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], p)};
    for (double x0 : {-1.7, 0.4, 1.0}) {
      const PayoffEstimate e = continuous_payoff(lq, 0, s, Vec{x0}, 1e-8, 0.005);
      CHECK(std::abs(e.value + p * x0 * x0) <= e.error_bound + 1e-8);
    }
  }
  SUBCASE("symmetric LQ equilibrium value") {
    const GameDefinition lq = lq_symmetric(2, 1.0);
    const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{41});
    const double p = test::symmetric_p(2, 1.0);
    const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], p),
                                          linear_feedback(grid, lq.control_sets[1], p)};
    const PayoffEstimate e = continuous_payoff(lq, 1, s, Vec{1.5}, 1e-8, 0.005);
    CHECK(std::abs(e.value + p * 2.25) <= e.error_bound + 1e-8);
  }
}

TEST_CASE("truncation tail is sound") {
  const GameDefinition lq = lq_symmetric(2, 1.0);
  const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{21});
  const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], 0.3),
                                        linear_feedback(grid, lq.control_sets[1], 0.8)};
  for (double tol : {1e-3, 1e-5, 1e-7}) {
    const PayoffEstimate a = continuous_payoff(lq, 0, s, Vec{1.2}, tol, 0.01);
    // Shrinking tol by e^{-rho T / 2} pushes T out by 50%.
    const PayoffEstimate b = continuous_payoff(lq, 0, s, Vec{1.2}, tol * std::exp(-0.5 * a.horizon), 0.01);
    REQUIRE(b.horizon >= 1.5 * a.horizon - 0.04);
    CHECK(std::abs(a.value - b.value) <= a.error_bound);
    CHECK(a.error_bound <= tol);
  }
}

TEST_CASE("growth_bound_check") {
  SUBCASE("frozen state with tiny K") {
    const GameDefinition z = zero_dynamics(1.0, 1.0);
    const Grid grid = Grid::uniform(z.state_domain, std::vector<int>{5});
    const auto s = constant_profile(z, grid, 0.0);
    const ContinuousTrajectory t = integrate_closed_loop(z, s, Vec{1.0}, 3.0, 0.01);
    const GrowthReport r = growth_bound_check(t, 1e-12, Vec{1.0});
    CHECK(r.satisfied);
    CHECK(r.worst_margin >= 0.0);
  }
  const GameDefinition d = decay(1.0, 4.0);
  const Grid grid = Grid::uniform(d.state_domain, std::vector<int>{21});
  SUBCASE("decay game with its own K") {
    const double k = resolve_constants(d, 4096, 0).growth_const;
    for (double u : {-1.0, 0.0, 1.0}) {
      const auto s = constant_profile(d, grid, u);
      const ContinuousTrajectory t = integrate_closed_loop(d, s, Vec{0.2}, 4.0, 0.01);
      CHECK(growth_bound_check(t, k, Vec{0.2}).satisfied);
    }
  }
  SUBCASE("undersized K is caught") {
    // y' = 1 - y from 0 reaches 0.63 at t = 1; K = 0.01 allows only about 0.14 there.
    const auto s = constant_profile(d, grid, 1.0);
    const ContinuousTrajectory t = integrate_closed_loop(d, s, Vec{0.0}, 1.0, 0.01);
    const GrowthReport r = growth_bound_check(t, 0.01, Vec{0.0});
    CHECK_FALSE(r.satisfied);
    CHECK(r.worst_margin < 0.0);
    CHECK(r.worst_time > 0.0);
  }
}

TEST_CASE("gronwall_gap_check") {
  SUBCASE("frozen state") {
    const GameDefinition z = zero_dynamics(1.0, 1.0, 2);
    const Grid grid = Grid::uniform(z.state_domain, std::vector<int>{5});
    const auto s = constant_profile(z, grid, 0.0);
    HypothesisData c = resolve_constants(z, 256, 0);
    const GapReport r = gronwall_gap_check(z, s, Vec{1.0}, make_timestep(1.0, 0.1), 2.0, c);
    CHECK(r.max_gap == 0.0);
    for (double b : r.bound) CHECK(b >= 0.0);
    CHECK(r.satisfied);
  }
  SUBCASE("decay game gap is first order") {
    const GameDefinition d = decay(1.0, 4.0);
    const Grid grid = Grid::uniform(d.state_domain, std::vector<int>{21});
    const auto s = constant_profile(d, grid, 0.0);
    HypothesisData c = resolve_constants(d, 4096, 0);
    c.strategy_lip = 0.0;
    const GapReport coarse = gronwall_gap_check(d, s, Vec{1.5}, make_timestep(4.0, 0.1), 3.0, c);
    const GapReport fine = gronwall_gap_check(d, s, Vec{1.5}, make_timestep(4.0, 0.05), 3.0, c);
    const double ratio = coarse.max_gap / fine.max_gap;
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
    CHECK(coarse.satisfied);
    CHECK(fine.satisfied);
  }
  SUBCASE("LQ equilibrium stays under the bound") {
    const GameDefinition lq = lq_one_player(0.0, 1.0, 1.0, 1.0, 1.0);
    const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{41});
    const double p = test::lq_p(0.0, 1.0, 1.0, 1.0, 1.0);
    const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], p)};
    HypothesisData c = resolve_constants(lq, 4096, 0);
    c.strategy_lip = p;
    const GapReport r = gronwall_gap_check(lq, s, Vec{1.0}, make_timestep(1.0, 0.05), 3.0, c);
    CHECK(r.satisfied);
    CHECK(r.lipschitz_precondition);
    for (std::size_t k = 0; k < r.gap.size(); ++k) CHECK(r.gap[k] <= r.bound[k]);
    // The interpolant is piecewise constant: equal to y_n on [t_n, t_{n+1}).
    for (std::size_t k = 0; k + 1 < r.times.size(); ++k) {
      const auto n = static_cast<std::size_t>(std::floor(r.times[k] / 0.05 + 1e-9));
      CHECK(r.discrete[k][0] == doctest::Approx(std::pow(1.0 - 0.05 * p, n)).epsilon(1e-12));
    }
  }
  SUBCASE("understated strategy Lipschitz constant is flagged") {
    const GameDefinition lq = lq_one_player(0.0, 1.0, 1.0, 1.0, 1.0);
    const Grid grid = Grid::uniform(lq.state_domain, std::vector<int>{41});
    const std::vector<StrategyField> s = {linear_feedback(grid, lq.control_sets[0], 0.9)};
    HypothesisData c = resolve_constants(lq, 4096, 0);
    c.strategy_lip = 0.5;
    const GapReport r = gronwall_gap_check(lq, s, Vec{1.0}, make_timestep(1.0, 0.05), 1.0, c);
    CHECK(r.measured_strategy_lip == doctest::Approx(0.9).epsilon(1e-9));
    CHECK_FALSE(r.lipschitz_precondition);
  }
}

TEST_CASE("CSV export") {
  const GameDefinition z = zero_dynamics(1.0, 1.0);
  const Grid grid = Grid::uniform(z.state_domain, std::vector<int>{5});
  const auto s = constant_profile(z, grid, 0.0);
  const ContinuousTrajectory t = integrate_closed_loop(z, s, Vec{0.5}, 0.2, 0.1);
  std::ostringstream out;
  write_continuous_csv(out, t);
  CHECK(out.str() == "t,y1,clamped\n0,0.5,0\n0.1,0.5,0\n0.2,0.5,0\n");

  HypothesisData c = resolve_constants(z, 64, 0);
  const GapReport r = gronwall_gap_check(z, s, Vec{0.5}, make_timestep(1.0, 0.1), 0.2, c, 2);
  std::ostringstream gap;
  write_gap_csv(gap, r);
  const std::string text = gap.str();
  CHECK(text.rfind("t,y1,ytilde1,gap,bound\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(r.times.size()) + 1);
}
