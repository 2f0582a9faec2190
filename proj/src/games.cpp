#include "dgame/games.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "dgame/errors.hpp"

namespace dgame {

namespace {

Box interval(double lo, double hi) { return Box{{lo}, {hi}}; }

void fill_players(GameDefinition& g, int n_players, double u_max) {
  g.n_players = n_players;
  g.state_dim = 1;
  g.control_dims.assign(n_players, 1);
  g.control_sets.assign(n_players, interval(-u_max, u_max));
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidInput(std::string("parameter '") + what + "' must be positive");
}

double control_sum(std::span<const double> u) {
  double s = 0.0;
  for (double c : u) s += c;
  return s;
}

}  // namespace

GameDefinition lq_one_player(double a, double b, double q, double r, double rho, double x_max,
                             double u_max) {
  require_positive(rho, "rho");
  require_positive(x_max, "x_max");
  require_positive(u_max, "u_max");
  require_positive(r, "r");
  GameDefinition g;
  g.name = "lq_one_player";
  g.params = {{"a", a}, {"b", b}, {"q", q}, {"r", r}, {"rho", rho}, {"x_max", x_max}, {"u_max", u_max}};
  fill_players(g, 1, u_max);
  g.state_domain = interval(-x_max, x_max);
  g.discount_rate = rho;
  g.dynamics = [a, b](std::span<const double> x, std::span<const double> u, std::span<double> v) {
    v[0] = a * x[0] + b * u[0];
  };
  g.payoffs = {[q, r](std::span<const double> x, std::span<const double> u) {
    return -(q * x[0] * x[0] + r * u[0] * u[0]);
  }};

  HypothesisData h;
  h.n_players = 1;
  h.lip_dynamics = std::max(std::abs(a), std::abs(b));
  h.lip_payoffs = {std::max(2.0 * std::abs(q) * x_max, 2.0 * r * u_max)};
  h.payoff_bound = std::abs(q) * x_max * x_max + r * u_max * u_max;
  h.growth_const = std::max(std::abs(a), std::abs(b) * u_max);
  h.dynamics_sup = std::abs(a) * x_max + std::abs(b) * u_max;
  g.analytic_constants = h;
  return g;
}

GameDefinition lq_symmetric(int n_players, double rho, double x_max, double u_max) {
  if (n_players < 1) throw InvalidInput("parameter 'n_players' must be >= 1");
  require_positive(rho, "rho");
  require_positive(x_max, "x_max");
  require_positive(u_max, "u_max");
  GameDefinition g;
  g.name = "lq_symmetric";
  g.params = {{"n_players", n_players}, {"rho", rho}, {"x_max", x_max}, {"u_max", u_max}};
  fill_players(g, n_players, u_max);
  g.state_domain = interval(-x_max, x_max);
  g.discount_rate = rho;
  g.dynamics = [](std::span<const double>, std::span<const double> u, std::span<double> v) {
    v[0] = control_sum(u);
  };
  for (int i = 0; i < n_players; ++i) {
    g.payoffs.push_back([i](std::span<const double> x, std::span<const double> u) {
      return -(x[0] * x[0] + u[i] * u[i]);
    });
  }

  HypothesisData h;
  h.n_players = n_players;
  h.lip_dynamics = 1.0;
  h.lip_payoffs.assign(n_players, 2.0 * std::max(x_max, u_max));
  h.payoff_bound = x_max * x_max + u_max * u_max;
  h.growth_const = n_players * u_max;
  h.dynamics_sup = n_players * u_max;
  g.analytic_constants = h;
  return g;
}

GameDefinition constant_payoff(double c, double rho, int n_players) {
  if (n_players < 1) throw InvalidInput("parameter 'n_players' must be >= 1");
  require_positive(rho, "rho");
  GameDefinition g;
  g.name = "constant_payoff";
  g.params = {{"c", c}, {"rho", rho}, {"n_players", n_players}};
  fill_players(g, n_players, 1.0);
  g.state_domain = interval(-1.0, 1.0);
  g.discount_rate = rho;
  g.dynamics = [](std::span<const double>, std::span<const double> u, std::span<double> v) {
    v[0] = control_sum(u);
  };
  g.payoffs.assign(n_players, [c](std::span<const double>, std::span<const double>) { return c; });

  HypothesisData h;
  h.n_players = n_players;
  h.lip_dynamics = 1.0;
  h.lip_payoffs.assign(n_players, 0.0);
  h.payoff_bound = std::abs(c);
  h.growth_const = n_players;
  h.dynamics_sup = n_players;
  g.analytic_constants = h;
  return g;
}

GameDefinition decay(double a, double rho, int n_players, double x_max, double u_max) {
  if (n_players < 1) throw InvalidInput("parameter 'n_players' must be >= 1");
  require_positive(rho, "rho");
  require_positive(x_max, "x_max");
  require_positive(u_max, "u_max");
  GameDefinition g;
  g.name = "decay";
  g.params = {{"a", a}, {"rho", rho}, {"n_players", n_players}, {"x_max", x_max}, {"u_max", u_max}};
  fill_players(g, n_players, u_max);
  g.state_domain = interval(-x_max, x_max);
  g.discount_rate = rho;
  g.dynamics = [a](std::span<const double> x, std::span<const double> u, std::span<double> v) {
    v[0] = -a * x[0] + control_sum(u);
  };
  for (int i = 0; i < n_players; ++i) {
    g.payoffs.push_back([i](std::span<const double> x, std::span<const double> u) {
      return -(x[0] * x[0] + u[i] * u[i]);
    });
  }

  HypothesisData h;
  h.n_players = n_players;
  h.lip_dynamics = std::max(std::abs(a), 1.0);
  h.lip_payoffs.assign(n_players, 2.0 * std::max(x_max, u_max));
  h.payoff_bound = x_max * x_max + u_max * u_max;
  h.growth_const = std::max(std::abs(a), n_players * u_max);
  h.dynamics_sup = std::abs(a) * x_max + n_players * u_max;
  g.analytic_constants = h;
  return g;
}

GameDefinition zero_dynamics(double q, double rho, int n_players, double x_max) {
  if (n_players < 1) throw InvalidInput("parameter 'n_players' must be >= 1");
  require_positive(rho, "rho");
  require_positive(x_max, "x_max");
  GameDefinition g;
  g.name = "zero_dynamics";
  g.params = {{"q", q}, {"rho", rho}, {"n_players", n_players}, {"x_max", x_max}};
  fill_players(g, n_players, 1.0);
  g.state_domain = interval(-x_max, x_max);
  g.discount_rate = rho;
  g.dynamics = [](std::span<const double>, std::span<const double>, std::span<double> v) {
    v[0] = 0.0;
  };
  g.payoffs.assign(n_players, [q](std::span<const double> x, std::span<const double>) {
    return -q * x[0] * x[0];
  });

  HypothesisData h;
  h.n_players = n_players;
  h.lip_dynamics = 0.0;
  h.lip_payoffs.assign(n_players, 2.0 * std::abs(q) * x_max);
  h.payoff_bound = std::abs(q) * x_max * x_max;
  h.growth_const = 0.0;
  h.dynamics_sup = 0.0;
  g.analytic_constants = h;
  return g;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

class ParamReader {
 public:
  ParamReader(std::string game, const GameParams& params) : game_(std::move(game)), params_(params) {}

  double required(const std::string& key) {
    used_.insert(key);
    const auto it = params_.find(key);
    if (it == params_.end())
      throw InvalidInput("game '" + game_ + "': missing parameter '" + key + "'");
    return it->second;
  }
  double optional(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }
  int integer(const std::string& key, double fallback) {
    const double v = optional(key, fallback);
    if (v != std::floor(v))
      throw InvalidInput("game '" + game_ + "': parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
  }
  void finish() const {
    for (const auto& [key, value] : params_)
      if (!used_.contains(key))
        throw InvalidInput("game '" + game_ + "': unknown parameter '" + key + "'");
  }

 private:
  std::string game_;
  const GameParams& params_;
  std::set<std::string> used_;
};

using Builder = std::function<GameDefinition(ParamReader&)>;

const std::map<std::string, Builder>& registry() {
  static const std::map<std::string, Builder> builders = {
      {"lq_one_player",
       [](ParamReader& p) {
         return lq_one_player(p.optional("a", 0.0), p.optional("b", 1.0), p.optional("q", 1.0),
                              p.optional("r", 1.0), p.required("rho"), p.optional("x_max", 2.0),
                              p.optional("u_max", 2.0));
       }},
      {"lq_symmetric",
       [](ParamReader& p) {
         return lq_symmetric(p.integer("n_players", 2), p.required("rho"),
                             p.optional("x_max", 2.0), p.optional("u_max", 2.0));
       }},
      {"constant_payoff",
       [](ParamReader& p) {
         return constant_payoff(p.required("c"), p.required("rho"), p.integer("n_players", 1));
       }},
      {"decay",
       [](ParamReader& p) {
         return decay(p.required("a"), p.required("rho"), p.integer("n_players", 1),
                      p.optional("x_max", 2.0), p.optional("u_max", 1.0));
       }},
      {"zero_dynamics",
       [](ParamReader& p) {
         return zero_dynamics(p.optional("q", 1.0), p.required("rho"), p.integer("n_players", 1),
                              p.optional("x_max", 2.0));
       }},
  };
  return builders;
}

}  // namespace

GameDefinition make_game(const std::string& name, const GameParams& params) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw InvalidInput("unknown game '" + name + "'");
  ParamReader reader(name, params);
  GameDefinition game = it->second(reader);
  reader.finish();
  validate(game);
  return game;
}

std::vector<std::string> registered_games() {
  std::vector<std::string> names;
  for (const auto& [name, builder] : registry()) names.push_back(name);
  return names;
}

// ---------------------------------------------------------------------------
// Riccati closed forms

RiccatiSolution riccati_one_player(double a, double b, double q, double r, double rho) {
  // Positive root of (b^2/r) p^2 + (rho - 2a) p - q = 0.
  const double qa = b * b / r;
  const double qb = rho - 2.0 * a;
  const double p = qa == 0.0 ? q / qb : (-qb + std::sqrt(qb * qb + 4.0 * qa * q)) / (2.0 * qa);
  return {p, b * p / r};
}

RiccatiSolution riccati_symmetric(int n_players, double rho) {
  const double c = 2.0 * n_players - 1.0;
  const double p = (-rho + std::sqrt(rho * rho + 4.0 * c)) / (2.0 * c);
  return {p, p};
}

std::optional<RiccatiSolution> riccati_for(const GameDefinition& game) {
  const auto& p = game.params;
  if (game.name == "lq_one_player")
    return riccati_one_player(p.at("a"), p.at("b"), p.at("q"), p.at("r"), p.at("rho"));
  if (game.name == "lq_symmetric")
    return riccati_symmetric(static_cast<int>(p.at("n_players")), p.at("rho"));
  return std::nullopt;
}

StrategyField linear_feedback(const Grid& grid, const Box& controls, double gain) {
  if (grid.dim() != 1 || controls.dim() != 1)
    throw InvalidInput("linear_feedback needs a scalar state and control");
  return StrategyField::sample(grid, controls,
                               [gain](std::span<const double> x) { return Vec{-gain * x[0]}; });
}

}  // namespace dgame
