#pragma once

#include <span>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/value_grid.hpp"

namespace dgame {

// A game closed by one feedback strategy per player: x -> g(x, phi_1(x), ...).
class ClosedLoop {
 public:
  ClosedLoop(const GameDefinition& game, std::span<const StrategyField> strategies);

  const GameDefinition& game() const { return game_; }
  std::size_t profile_size() const { return profile_size_; }

  // Fills the flat control profile phi_1(x), ..., phi_N(x).
  void controls(std::span<const double> x, std::span<double> profile) const;
  // Velocity g(x, phi(x)); profile is scratch space of profile_size().
  void velocity(std::span<const double> x, std::span<double> profile, std::span<double> v) const;
  double payoff(int player, std::span<const double> x, std::span<const double> profile) const {
    return game_.payoffs[player](x, profile);
  }

  // Per-player split of a flat profile.
  std::vector<Vec> split(std::span<const double> profile) const;

 private:
  const GameDefinition& game_;
  std::span<const StrategyField> strategies_;
  std::size_t profile_size_;
};

}  // namespace dgame
