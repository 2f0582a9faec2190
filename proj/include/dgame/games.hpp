#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/value_grid.hpp"

namespace dgame {

using GameParams = std::map<std::string, double>;

// One-player linear-quadratic regulator: x' = a x + b u, f = -(q x^2 + r u^2)
// on x in [-x_max, x_max], u in [-u_max, u_max].
GameDefinition lq_one_player(double a, double b, double q, double r, double rho,
                             double x_max = 2.0, double u_max = 2.0);

// N-player symmetric game: x' = sum_j u_j, f_i = -(x^2 + u_i^2).
GameDefinition lq_symmetric(int n_players, double rho, double x_max = 2.0, double u_max = 2.0);

// f_i = c for every player; x' = sum_j u_j on x in [-1, 1], u_j in [-1, 1].
GameDefinition constant_payoff(double c, double rho, int n_players = 1);

// x' = -a x + sum_j u_j with |u_j| <= u_max, f_i = -(x^2 + u_i^2).
GameDefinition decay(double a, double rho, int n_players = 1, double x_max = 2.0,
                     double u_max = 1.0);

// Frozen state: x' = 0 and f_i = -q x^2 regardless of controls.
GameDefinition zero_dynamics(double q, double rho, int n_players = 1, double x_max = 2.0);

// Builder lookup by name. Unknown names or parameters throw InvalidInput.
GameDefinition make_game(const std::string& name, const GameParams& params);
std::vector<std::string> registered_games();

// Closed-form linear feedback gains u_i = -k x of the LQ benchmarks.
// For lq_one_player the value is -p x^2 with (b^2/r) p^2 + (rho - 2a) p - q = 0
// and k = b p / r. For lq_symmetric each player's value is -p x^2 with
// (2N - 1) p^2 + rho p - 1 = 0 and k = p.
struct RiccatiSolution {
  double p;  // value coefficient, V(x) = -p x^2
  double k;  // feedback gain, phi(x) = -k x
};
RiccatiSolution riccati_one_player(double a, double b, double q, double r, double rho);
RiccatiSolution riccati_symmetric(int n_players, double rho);

// Closed-form LQ solution of a registered LQ game (lq_one_player or
// lq_symmetric); nullopt for other games.
std::optional<RiccatiSolution> riccati_for(const GameDefinition& game);

// Linear feedback -k x sampled on a grid and clamped into the control box.
StrategyField linear_feedback(const Grid& grid, const Box& controls, double gain);

}  // namespace dgame
