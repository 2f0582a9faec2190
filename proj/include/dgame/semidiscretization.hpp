#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/value_grid.hpp"

namespace dgame {

// Time step of the discrete game: beta = 1 - rho h is the per-step discount
// and theta = -log(1 - rho h) / (rho h) > 1 measures how far beta^n lags
// behind exp(-rho t_n).
struct TimeStep {
  double rho = 1.0;
  double h = 0.0;
  double beta = 0.0;
  double theta = 0.0;
};

// Throws InvalidStep unless rho > 0, h > 0 and rho h < 1.
TimeStep make_timestep(double rho, double h);

struct EulerResult {
  Vec state;
  bool clamped = false;
};

// x + h g(x, u), projected onto the state box.
EulerResult euler_step(const GameDefinition& game, std::span<const double> x,
                       std::span<const Vec> controls, double h);

struct DiscreteTrajectory {
  double h = 0.0;
  std::vector<Vec> states;                 // x_0 .. x_J
  std::vector<std::vector<Vec>> controls;  // per step, per player
  std::vector<bool> clamped;               // per step: x_{k+1} was projected

  std::size_t steps() const { return controls.size(); }
};

// Closed-loop Euler rollout with u_j = strategies[j](x_n). Throws
// DivergenceError naming the step when a state becomes non-finite.
DiscreteTrajectory rollout_discrete(const GameDefinition& game,
                                    std::span<const StrategyField> strategies,
                                    std::span<const double> x0, const TimeStep& ts,
                                    std::size_t n_steps);

struct PayoffEstimate {
  double value = 0.0;
  double error_bound = 0.0;  // truncation tail (plus quadrature estimate, continuous case)
  std::size_t steps = 0;     // discrete: truncation index J; continuous: RK4 steps
  double horizon = 0.0;      // t_J or T
};

// h sum_{n<J} beta^n f_i(x_n, ...), J being the smallest index with
// M beta^J h / (1 - beta) <= tol. M is the payoff bound of the game.
PayoffEstimate discrete_payoff(const GameDefinition& game, int player,
                               std::span<const StrategyField> strategies,
                               std::span<const double> x0, const TimeStep& ts, double tol);

// Same series summed over a fixed number of steps (no truncation rule).
double discrete_payoff_partial(const GameDefinition& game, int player,
                               std::span<const StrategyField> strategies,
                               std::span<const double> x0, const TimeStep& ts,
                               std::size_t n_steps);

// CSV: step,t,x1..xn,u<player>_<k>...,clamped
void write_trajectory_csv(std::ostream& out, const GameDefinition& game,
                          const DiscreteTrajectory& traj);

// Payoff bound M: analytic if the builder provides it, else a sampled estimate.
double payoff_bound(const GameDefinition& game);

}  // namespace dgame
