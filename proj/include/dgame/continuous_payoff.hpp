#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/semidiscretization.hpp"
#include "dgame/value_grid.hpp"

namespace dgame {

struct ContinuousTrajectory {
  double dt = 0.0;
  Vec times;
  std::vector<Vec> states;
  std::vector<bool> clamped;  // per sample: state was projected onto the box
};

// Fixed-step classical RK4 on x' = g(x, phi_1(x), ..., phi_N(x)) over
// ceil(T / dt) steps. Each step is projected onto the state box.
ContinuousTrajectory integrate_closed_loop(const GameDefinition& game,
                                           std::span<const StrategyField> strategies,
                                           std::span<const double> x0, double horizon, double dt);

// Integral of e^{-rho t} f_i along the closed loop, truncated at the first
// multiple of 4 dt past T with (M / rho) e^{-rho T} <= tol / 2 and evaluated
// by composite Simpson. error_bound = tail + |S(dt) - S(2 dt)|.
PayoffEstimate continuous_payoff(const GameDefinition& game, int player,
                                 std::span<const StrategyField> strategies,
                                 std::span<const double> x0, double tol, double dt);

struct GrowthReport {
  bool satisfied = true;
  double worst_margin = 0.0;  // min over samples of bound - |y(t)|
  double worst_time = 0.0;
};

// Checks |y(t)| <= (|x0| + sqrt(2 K t)) e^{K t} at every sample.
GrowthReport growth_bound_check(const ContinuousTrajectory& traj, double growth_const,
                                std::span<const double> x0);

struct GapReport {
  double h = 0.0;
  Vec times;
  std::vector<Vec> continuous;  // y(t)
  std::vector<Vec> discrete;    // piecewise-constant Euler interpolant
  Vec gap;                      // |y(t) - y~(t)|
  Vec bound;                    // K h (1 + (|x| + sqrt(2Kt)) e^{Kt}) e^{Lt}
  double max_gap = 0.0;
  double worst_margin = 0.0;    // min over samples of bound - gap
  bool satisfied = true;
  // Measured Lipschitz constant of the strategies against constants.strategy_lip.
  double measured_strategy_lip = 0.0;
  bool lipschitz_precondition = true;
};

// Compares the RK4 closed loop (substeps per h) with the Euler interpolant
// y~(t) = y_n on [t_n, t_{n+1}) over [0, T]. L = constants.combined_lip().
GapReport gronwall_gap_check(const GameDefinition& game, std::span<const StrategyField> strategies,
                             std::span<const double> x0, const TimeStep& ts, double horizon,
                             const HypothesisData& constants, int substeps = 20);

// CSV: t,y1..yn,clamped
void write_continuous_csv(std::ostream& out, const ContinuousTrajectory& traj);
// CSV: t,y1..yn,ytilde1..ytilden,gap,bound
void write_gap_csv(std::ostream& out, const GapReport& report);

}  // namespace dgame
