#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgame/common.hpp"

namespace dgame {

// Control profiles are passed to the model functions as one flat buffer:
// player 0's controls, then player 1's, and so on (see control_offset).
using DynamicsFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                      std::span<double> velocity)>;
using PayoffFn = std::function<double(std::span<const double> x, std::span<const double> u)>;

// Regularity constants of the game.
//
// Lipschitz constants use the distance |x - y| + sum_j |u_j - v_j| on the
// product space. growth_const is the smallest K with |g| <= K (1 + |x|).
// strategy_lip is the Lipschitz constant of the feedback strategies in play;
// it is not a property of the game alone and is filled in once strategies are
// known.
struct HypothesisData {
  int n_players = 1;
  double lip_dynamics = 0.0;
  std::vector<double> lip_payoffs;
  double payoff_bound = 0.0;
  double growth_const = 0.0;
  double strategy_lip = 0.0;
  std::optional<double> dynamics_sup;  // finite only when g is bounded

  // L = L_g (1 + N L_s).
  double combined_lip() const { return lip_dynamics * (1.0 + n_players * strategy_lip); }
};

struct GameDefinition {
  std::string name;
  std::map<std::string, double> params;  // builder parameters, recorded in manifests

  int n_players = 1;
  int state_dim = 1;
  std::vector<int> control_dims;
  Box state_domain;
  std::vector<Box> control_sets;
  DynamicsFn dynamics;
  std::vector<PayoffFn> payoffs;
  double discount_rate = 1.0;

  // Analytic constants supplied by the builder take precedence over sampling.
  std::optional<HypothesisData> analytic_constants;

  std::size_t control_offset(int player) const;
  std::size_t profile_size() const;
};

// Throws InvalidInput when the definition breaks its invariants.
void validate(const GameDefinition& game);

// Concatenates per-player controls into a profile buffer, checking dimensions.
Vec flatten_controls(const GameDefinition& game, std::span<const Vec> controls);

Vec eval_dynamics(const GameDefinition& game, std::span<const double> x,
                  std::span<const Vec> controls);

double eval_payoff(const GameDefinition& game, int player, std::span<const double> x,
                   std::span<const Vec> controls);

// Empirical lower estimates of the constants from sample_count point pairs.
// Pairs cycle through "perturb everything", "perturb x only" and "perturb
// u_j only" so that partial difference quotients are probed directly. The
// draws form a single stream, so estimates for n samples are running maxima
// over a prefix of the stream used for n + 1 samples.
HypothesisData estimate_constants(const GameDefinition& game, int sample_count,
                                  std::uint64_t seed);

// Analytic constants when the builder provides them, sampled otherwise.
HypothesisData resolve_constants(const GameDefinition& game, int sample_count = 4096,
                                 std::uint64_t seed = 0);

struct RateMargins {
  std::optional<double> bounded_dynamics;  // rho - L, only when g is bounded
  double growth = 0.0;                     // rho - (L + K)

  bool bounded_ok() const { return bounded_dynamics && *bounded_dynamics > 0.0; }
  bool growth_ok() const { return growth > 0.0; }
  // Either sufficient condition for the first-order consistency estimate.
  bool applies() const { return bounded_ok() || growth_ok(); }
};

RateMargins rate_condition_margin(const HypothesisData& hyp, double rho);

}  // namespace dgame
