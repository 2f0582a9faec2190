#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/semidiscretization.hpp"
#include "dgame/value_grid.hpp"

namespace dgame {

struct SolverConfig {
  std::vector<int> control_samples = {201};  // per player, per control dimension; one entry broadcasts
  double inner_tol = 1e-6;
  double outer_tol = 1e-6;
  int max_inner = 100000;
  int max_outer = 100;
  double damping = 1.0;  // in (0, 1]
  int threads = 1;

  int samples_for(int player) const;
};

// Throws InvalidInput on non-positive tolerances, < 2 samples or bad damping.
void validate(const SolverConfig& cfg, int n_players);

// Uniform lattice over a control box, in lexicographic order (first
// coordinate slowest). The first point is the box's lower corner.
class ControlLattice {
 public:
  ControlLattice(const Box& box, int samples_per_dim);
  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t k) const {
    return std::span<const double>(points_).subspan(k * dim_, dim_);
  }

 private:
  std::size_t dim_;
  std::size_t count_;
  Vec points_;
};

struct BellmanUpdate {
  GridFunction value;
  StrategyField strategy;  // greedy (argmax) controls
};

// One application of player i's discrete Bellman operator at every node:
//   max_{u in lattice} h f_i(x, u, phi_{-i}(x)) + beta v(x + h g(x, u, phi_{-i}(x))).
// Ties go to the lexicographically smallest lattice control. profile holds
// one strategy per player; entry `player` is ignored.
BellmanUpdate bellman_operator(const GameDefinition& game, int player, const GridFunction& v,
                               std::span<const StrategyField> profile, const TimeStep& ts,
                               const SolverConfig& cfg);

struct BestResponse {
  GridFunction value;
  StrategyField strategy;
  int iterations = 0;
  double residual = 0.0;  // sup_diff of the last two iterates
};

// Value iteration from v0 until successive iterates differ by at most
// inner_tol (1 - beta), which puts the result within inner_tol of the fixed
// point. Throws NonConvergence after max_inner iterations.
BestResponse best_response_value(const GameDefinition& game, int player,
                                 std::span<const StrategyField> profile, const TimeStep& ts,
                                 const SolverConfig& cfg, const GridFunction& v0);

struct SolveDiagnostics {
  std::vector<int> inner_iterations;     // per player, summed over sweeps
  std::vector<double> inner_residuals;   // per player, last sweep
  std::vector<double> sweep_changes;     // max strategy change per sweep
  int outer_sweeps = 0;
  double strategy_change = 0.0;          // last sweep
  std::vector<double> bellman_residuals; // per player, at the returned iterate
  bool converged = false;
};

struct NashSolution {
  std::vector<GridFunction> values;
  std::vector<StrategyField> strategies;
  TimeStep ts;
  SolveDiagnostics diagnostics;
};

struct WarmStart {
  std::vector<GridFunction> values;
  std::vector<StrategyField> strategies;
};

// Failure of the outer best-response iteration; carries the last iterate.
class NashNonConvergence : public std::runtime_error {
 public:
  NashNonConvergence(const std::string& what, NashSolution last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const NashSolution& last_iterate() const { return last_; }

 private:
  NashSolution last_;
};

// Damped Gauss-Seidel best-response sweeps on the coupled Bellman system.
// Starts from V = 0 and midpoint strategies unless a warm start is given.
// The grid must cover the state box. A one-player game is solved by a single
// best response.
NashSolution solve_nash(const GameDefinition& game, const Grid& grid, const TimeStep& ts,
                        const SolverConfig& cfg, const std::optional<WarmStart>& warm = std::nullopt);

// sup over nodes of |V_i - T_i V_i| with T_i built from sol's strategies.
std::vector<double> bellman_residual(const GameDefinition& game, const NashSolution& sol,
                                     const SolverConfig& cfg);

}  // namespace dgame
