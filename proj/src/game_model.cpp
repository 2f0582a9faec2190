#include "dgame/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dgame/errors.hpp"
#include "dgame/random.hpp"

namespace dgame {

std::size_t GameDefinition::control_offset(int player) const {
  std::size_t off = 0;
  for (int j = 0; j < player; ++j) off += static_cast<std::size_t>(control_dims[j]);
  return off;
}

std::size_t GameDefinition::profile_size() const {
  return std::accumulate(control_dims.begin(), control_dims.end(), std::size_t{0});
}

void validate(const GameDefinition& game) {
  if (game.n_players < 1) throw InvalidInput("game '" + game.name + "': n_players must be >= 1");
  if (game.state_dim < 1) throw InvalidInput("game '" + game.name + "': state_dim must be >= 1");
  if (!(game.discount_rate > 0.0) || !std::isfinite(game.discount_rate))
    throw InvalidInput("game '" + game.name + "': discount rate must be positive");
  const auto n = static_cast<std::size_t>(game.n_players);
  if (game.control_dims.size() != n || game.control_sets.size() != n || game.payoffs.size() != n)
    throw InvalidInput("game '" + game.name + "': per-player arrays must have n_players entries");
  validate_box(game.state_domain, "state domain");
  if (game.state_domain.dim() != static_cast<std::size_t>(game.state_dim))
    throw InvalidInput("game '" + game.name + "': state domain dimension != state_dim");
  for (std::size_t i = 0; i < n; ++i) {
    if (game.control_dims[i] < 1) throw InvalidInput("control dimension must be >= 1");
    validate_box(game.control_sets[i], "control set of player " + std::to_string(i));
    if (game.control_sets[i].dim() != static_cast<std::size_t>(game.control_dims[i]))
      throw InvalidInput("control set dimension mismatch for player " + std::to_string(i));
    if (!game.payoffs[i]) throw InvalidInput("missing payoff for player " + std::to_string(i));
  }
  if (!game.dynamics) throw InvalidInput("game '" + game.name + "': missing dynamics");
}

Vec flatten_controls(const GameDefinition& game, std::span<const Vec> controls) {
  if (controls.size() != static_cast<std::size_t>(game.n_players))
    throw InvalidInput("expected " + std::to_string(game.n_players) + " control vectors, got " +
                       std::to_string(controls.size()));
  Vec profile;
  profile.reserve(game.profile_size());
  for (int i = 0; i < game.n_players; ++i) {
    if (controls[i].size() != static_cast<std::size_t>(game.control_dims[i]))
      throw InvalidInput("control vector of player " + std::to_string(i) + " has dimension " +
                         std::to_string(controls[i].size()));
    profile.insert(profile.end(), controls[i].begin(), controls[i].end());
  }
  return profile;
}

namespace {

void check_state(const GameDefinition& game, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(game.state_dim))
    throw InvalidInput("state has dimension " + std::to_string(x.size()) + ", expected " +
                       std::to_string(game.state_dim));
}

}  // namespace

Vec eval_dynamics(const GameDefinition& game, std::span<const double> x,
                  std::span<const Vec> controls) {
  check_state(game, x);
  const Vec profile = flatten_controls(game, controls);
  Vec velocity(game.state_dim, 0.0);
  game.dynamics(x, profile, velocity);
  return velocity;
}

double eval_payoff(const GameDefinition& game, int player, std::span<const double> x,
                   std::span<const Vec> controls) {
  if (player < 0 || player >= game.n_players)
    throw InvalidInput("player index " + std::to_string(player) + " out of range");
  check_state(game, x);
  const Vec profile = flatten_controls(game, controls);
  return game.payoffs[player](x, profile);
}

namespace {

struct SamplePoint {
  Vec x;
  Vec u;
};

void draw(Rng& rng, const Box& box, std::span<double> out) {
  for (std::size_t k = 0; k < box.dim(); ++k) out[k] = rng.uniform(box.lower[k], box.upper[k]);
}

}  // namespace

HypothesisData estimate_constants(const GameDefinition& game, int sample_count,
                                  std::uint64_t seed) {
  validate(game);
  if (sample_count < 2) throw InvalidInput("estimate_constants: sample_count must be >= 2");
  if (!game.state_domain.bounded()) throw UnsupportedDomain("state domain is not bounded");
  for (const auto& u : game.control_sets)
    if (!u.bounded()) throw UnsupportedDomain("control set is not bounded");

  const int n_players = game.n_players;
  const std::size_t n = game.state_dim;
  HypothesisData hyp;
  hyp.n_players = n_players;
  hyp.lip_payoffs.assign(n_players, 0.0);
  double dyn_sup = 0.0;

  Rng rng(seed);
  SamplePoint a{Vec(n), Vec(game.profile_size())};
  SamplePoint b = a;
  Vec ga(n), gb(n);

  auto observe = [&](const SamplePoint& p, std::span<double> g) {
    game.dynamics(p.x, p.u, g);
    const double gn = norm2(g);
    dyn_sup = std::max(dyn_sup, gn);
    hyp.growth_const = std::max(hyp.growth_const, gn / (1.0 + norm2(p.x)));
  };

  const int kinds = 2 + n_players;
  for (int s = 0; s < sample_count; ++s) {
    draw(rng, game.state_domain, a.x);
    for (int j = 0; j < n_players; ++j)
      draw(rng, game.control_sets[j],
           std::span<double>(a.u).subspan(game.control_offset(j), game.control_dims[j]));
    b = a;
    const int kind = s % kinds;
    if (kind == 0 || kind == 1) draw(rng, game.state_domain, b.x);
    for (int j = 0; j < n_players; ++j) {
      if (kind == 0 || kind == 2 + j)
        draw(rng, game.control_sets[j],
             std::span<double>(b.u).subspan(game.control_offset(j), game.control_dims[j]));
    }

    observe(a, ga);
    observe(b, gb);

    double dist = distance2(a.x, b.x);
    for (int j = 0; j < n_players; ++j) {
      const auto off = game.control_offset(j);
      const auto m = static_cast<std::size_t>(game.control_dims[j]);
      dist += distance2(std::span<const double>(a.u).subspan(off, m),
                        std::span<const double>(b.u).subspan(off, m));
    }

    if (dist > 0.0) hyp.lip_dynamics = std::max(hyp.lip_dynamics, distance2(ga, gb) / dist);
    for (int i = 0; i < n_players; ++i) {
      const double fa = game.payoffs[i](a.x, a.u);
      const double fb = game.payoffs[i](b.x, b.u);
      hyp.payoff_bound = std::max({hyp.payoff_bound, std::abs(fa), std::abs(fb)});
      if (dist > 0.0) hyp.lip_payoffs[i] = std::max(hyp.lip_payoffs[i], std::abs(fa - fb) / dist);
    }
  }
  hyp.dynamics_sup = dyn_sup;
  return hyp;
}

HypothesisData resolve_constants(const GameDefinition& game, int sample_count,
                                 std::uint64_t seed) {
  if (game.analytic_constants) return *game.analytic_constants;
  return estimate_constants(game, sample_count, seed);
}

RateMargins rate_condition_margin(const HypothesisData& hyp, double rho) {
  const double lip = hyp.combined_lip();
  RateMargins m;
  if (hyp.dynamics_sup && std::isfinite(*hyp.dynamics_sup)) m.bounded_dynamics = rho - lip;
  m.growth = rho - (lip + hyp.growth_const);
  return m;
}

}  // namespace dgame
