#include "dgame/nash_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dgame/errors.hpp"
#include "dgame/parallel.hpp"

namespace dgame {

int SolverConfig::samples_for(int player) const {
  if (control_samples.size() == 1) return control_samples.front();
  return control_samples.at(static_cast<std::size_t>(player));
}

void validate(const SolverConfig& cfg, int n_players) {
  if (!(cfg.inner_tol > 0.0)) throw InvalidInput("solver: inner_tol must be positive");
  if (!(cfg.outer_tol > 0.0)) throw InvalidInput("solver: outer_tol must be positive");
  if (cfg.max_inner < 1 || cfg.max_outer < 1)
    throw InvalidInput("solver: max_inner and max_outer must be >= 1");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw InvalidInput("solver: damping must lie in (0, 1]");
  if (cfg.control_samples.size() != 1 &&
      cfg.control_samples.size() != static_cast<std::size_t>(n_players))
    throw InvalidInput("solver: control_samples needs one entry or one per player");
  for (int s : cfg.control_samples)
    if (s < 2) throw InvalidInput("solver: control_samples must be >= 2");
}

ControlLattice::ControlLattice(const Box& box, int samples_per_dim) : dim_(box.dim()) {
  if (samples_per_dim < 2) throw InvalidInput("control lattice needs >= 2 samples per dimension");
  const auto s = static_cast<std::size_t>(samples_per_dim);
  count_ = 1;
  for (std::size_t d = 0; d < dim_; ++d) count_ *= s;
  points_.resize(count_ * dim_);
  for (std::size_t k = 0; k < count_; ++k) {
    std::size_t rem = k;
    for (std::size_t d = dim_; d-- > 0;) {
      const std::size_t i = rem % s;
      rem /= s;
      const double lo = box.lower[d], hi = box.upper[d];
      points_[k * dim_ + d] =
          i + 1 == s ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(s - 1);
    }
  }
}

namespace {

void check_profile(const GameDefinition& game, int player, const Grid& grid,
                   std::span<const StrategyField> profile) {
  if (player < 0 || player >= game.n_players) throw InvalidInput("player index out of range");
  if (profile.size() != static_cast<std::size_t>(game.n_players))
    throw InvalidInput("strategy profile needs one field per player");
  for (int j = 0; j < game.n_players; ++j) {
    if (j == player) continue;
    if (!(profile[j].grid() == grid))
      throw InvalidInput("strategy of player " + std::to_string(j) + " lives on a different grid");
    if (profile[j].control_dim() != static_cast<std::size_t>(game.control_dims[j]))
      throw InvalidInput("strategy of player " + std::to_string(j) + " has wrong control dimension");
  }
}

}  // namespace

BellmanUpdate bellman_operator(const GameDefinition& game, int player, const GridFunction& v,
                               std::span<const StrategyField> profile, const TimeStep& ts,
                               const SolverConfig& cfg) {
  const Grid& grid = v.grid();
  check_profile(game, player, grid, profile);
  const ControlLattice lattice(game.control_sets[player], cfg.samples_for(player));
  const std::size_t n_nodes = grid.node_count();
  const std::size_t n = grid.dim();
  const std::size_t m = lattice.dim();
  const std::size_t own = game.control_offset(player);
  const auto& payoff = game.payoffs[player];

  Vec values(n_nodes);
  Vec controls(n_nodes * m);

  parallel_for(n_nodes, cfg.threads, [&](std::size_t begin, std::size_t end) {
    Vec x(n), foot(n), vel(n), u(game.profile_size());
    for (std::size_t node = begin; node < end; ++node) {
      grid.node(node, x);
      for (int j = 0; j < game.n_players; ++j) {
        if (j == player) continue;
        const auto c = profile[j].at(node);
        std::copy(c.begin(), c.end(), u.begin() + static_cast<std::ptrdiff_t>(game.control_offset(j)));
      }
      double best = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t k = 0; k < lattice.size(); ++k) {
        const auto point = lattice.point(k);
        std::copy(point.begin(), point.end(), u.begin() + static_cast<std::ptrdiff_t>(own));
        game.dynamics(x, u, vel);
        for (std::size_t d = 0; d < n; ++d) foot[d] = x[d] + ts.h * vel[d];
        const double q = ts.h * payoff(x, u) + ts.beta * v.interpolate(foot);
        if (q > best) {
          best = q;
          arg = k;
        }
      }
      values[node] = best;
      const auto point = lattice.point(arg);
      std::copy(point.begin(), point.end(), controls.begin() + static_cast<std::ptrdiff_t>(node * m));
    }
  });

  return BellmanUpdate{GridFunction(grid, std::move(values)),
                       StrategyField(grid, game.control_sets[player], std::move(controls))};
}

BestResponse best_response_value(const GameDefinition& game, int player,
                                 std::span<const StrategyField> profile, const TimeStep& ts,
                                 const SolverConfig& cfg, const GridFunction& v0) {
  validate(cfg, game.n_players);
  const double stop = cfg.inner_tol * (1.0 - ts.beta);
  GridFunction v = v0;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_inner; ++it) {
    BellmanUpdate next = bellman_operator(game, player, v, profile, ts, cfg);
    residual = sup_diff(next.value, v);
    if (residual <= stop)
      return BestResponse{std::move(next.value), std::move(next.strategy), it, residual};
    v = std::move(next.value);
  }
  throw NonConvergence("value iteration for player " + std::to_string(player) +
                           " did not converge in " + std::to_string(cfg.max_inner) +
                           " iterations (last residual " + std::to_string(residual) + ")",
                       residual);
}

namespace {

StrategyField damped(const StrategyField& old, const StrategyField& fresh, double damping) {
  if (damping == 1.0) return fresh;
  Vec c = old.controls();
  for (std::size_t k = 0; k < c.size(); ++k)
    c[k] = (1.0 - damping) * c[k] + damping * fresh.controls()[k];
  const std::size_t m = old.control_dim();
  for (std::size_t node = 0; node < old.grid().node_count(); ++node)
    old.control_box().clamp(std::span<double>(c).subspan(node * m, m));
  return StrategyField(old.grid(), old.control_box(), std::move(c));
}

}  // namespace

NashSolution solve_nash(const GameDefinition& game, const Grid& grid, const TimeStep& ts,
                        const SolverConfig& cfg, const std::optional<WarmStart>& warm) {
  validate(game);
  validate(cfg, game.n_players);
  if (!(grid.box() == game.state_domain))
    throw InvalidInput("solver grid must span the state domain");
  const int players = game.n_players;

  NashSolution sol;
  sol.ts = ts;
  if (warm) {
    if (warm->values.size() != static_cast<std::size_t>(players) ||
        warm->strategies.size() != static_cast<std::size_t>(players))
      throw InvalidInput("warm start needs one value and one strategy per player");
    for (int i = 0; i < players; ++i) {
      if (!(warm->values[i].grid() == grid) || !(warm->strategies[i].grid() == grid))
        throw InvalidInput("warm start lives on a different grid");
    }
    sol.values = warm->values;
    sol.strategies = warm->strategies;
  } else {
    for (int i = 0; i < players; ++i) {
      sol.values.push_back(GridFunction::constant(grid, 0.0));
      sol.strategies.push_back(
          StrategyField::constant(grid, game.control_sets[i], game.control_sets[i].midpoint()));
    }
  }
  auto& diag = sol.diagnostics;
  diag.inner_iterations.assign(players, 0);
  diag.inner_residuals.assign(players, 0.0);

  double best_change = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int sweep = 1; sweep <= cfg.max_outer; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < players; ++i) {
      std::optional<BestResponse> br;
      try {
        br.emplace(best_response_value(game, i, sol.strategies, ts, cfg, sol.values[i]));
      } catch (const NonConvergence& e) {
        diag.outer_sweeps = sweep;
        throw NashNonConvergence(std::string("inner iteration failed: ") + e.what(), sol);
      }
      diag.inner_iterations[i] += br->iterations;
      diag.inner_residuals[i] = br->residual;
      StrategyField next = damped(sol.strategies[i], br->strategy, cfg.damping);
      change = std::max(change, sup_diff(next, sol.strategies[i]));
      sol.values[i] = std::move(br->value);
      sol.strategies[i] = std::move(next);
    }
    diag.outer_sweeps = sweep;
    diag.sweep_changes.push_back(change);
    diag.strategy_change = change;

    if (players == 1 || change <= cfg.outer_tol) {
      diag.converged = true;
      break;
    }
    if (change < best_change) {
      best_change = change;
      stalled = 0;
    } else if (++stalled >= 5) {
      diag.bellman_residuals = bellman_residual(game, sol, cfg);
      throw NashNonConvergence("best-response sweeps oscillate: strategy change " +
                                   std::to_string(change) + " has not decreased in 5 sweeps",
                               sol);
    }
  }
  diag.bellman_residuals = bellman_residual(game, sol, cfg);
  if (!diag.converged)
    throw NashNonConvergence("best-response sweeps did not converge in " +
                                 std::to_string(cfg.max_outer) + " sweeps",
                             sol);
  return sol;
}

std::vector<double> bellman_residual(const GameDefinition& game, const NashSolution& sol,
                                     const SolverConfig& cfg) {
  std::vector<double> out;
  for (int i = 0; i < game.n_players; ++i) {
    const BellmanUpdate t = bellman_operator(game, i, sol.values[i], sol.strategies, sol.ts, cfg);
    out.push_back(sup_diff(t.value, sol.values[i]));
  }
  return out;
}

}  // namespace dgame
