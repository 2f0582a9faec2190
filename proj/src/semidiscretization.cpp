#include "dgame/semidiscretization.hpp"

#include <cmath>
#include <string>

#include "dgame/closed_loop.hpp"
#include "dgame/csv.hpp"
#include "dgame/errors.hpp"

namespace dgame {

ClosedLoop::ClosedLoop(const GameDefinition& game, std::span<const StrategyField> strategies)
    : game_(game), strategies_(strategies), profile_size_(game.profile_size()) {
  if (strategies.size() != static_cast<std::size_t>(game.n_players))
    throw InvalidInput("expected " + std::to_string(game.n_players) + " strategies, got " +
                       std::to_string(strategies.size()));
  for (int i = 0; i < game.n_players; ++i) {
    if (strategies[i].control_dim() != static_cast<std::size_t>(game.control_dims[i]))
      throw InvalidInput("strategy of player " + std::to_string(i) + " has wrong control dimension");
    if (strategies[i].grid().dim() != static_cast<std::size_t>(game.state_dim))
      throw InvalidInput("strategy of player " + std::to_string(i) + " has wrong state dimension");
  }
}

void ClosedLoop::controls(std::span<const double> x, std::span<double> profile) const {
  for (int i = 0; i < game_.n_players; ++i)
    strategies_[i].interpolate(x, profile.subspan(game_.control_offset(i), game_.control_dims[i]));
}

void ClosedLoop::velocity(std::span<const double> x, std::span<double> profile,
                          std::span<double> v) const {
  controls(x, profile);
  game_.dynamics(x, profile, v);
}

std::vector<Vec> ClosedLoop::split(std::span<const double> profile) const {
  std::vector<Vec> out(game_.n_players);
  for (int i = 0; i < game_.n_players; ++i) {
    const auto s = profile.subspan(game_.control_offset(i), game_.control_dims[i]);
    out[i].assign(s.begin(), s.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

TimeStep make_timestep(double rho, double h) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidStep("discount rate must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidStep("time step must be positive");
  const double rh = rho * h;
  if (!(rh < 1.0))
    throw InvalidStep("time step h=" + format_number(h) + " must satisfy h < 1/rho = " +
                      format_number(1.0 / rho));
  return TimeStep{rho, h, 1.0 - rh, -std::log1p(-rh) / rh};
}

EulerResult euler_step(const GameDefinition& game, std::span<const double> x,
                       std::span<const Vec> controls, double h) {
  Vec v = eval_dynamics(game, x, controls);
  EulerResult r;
  r.state.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r.state[k] = x[k] + h * v[k];
  r.clamped = game.state_domain.clamp(r.state);
  return r;
}

namespace {

void check_x0(const GameDefinition& game, std::span<const double> x0) {
  if (x0.size() != static_cast<std::size_t>(game.state_dim))
    throw InvalidInput("initial state has dimension " + std::to_string(x0.size()));
  if (!all_finite(x0)) throw InvalidInput("initial state is not finite");
}

// Neumaier compensated sum.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Steps the closed-loop Euler recursion in place. Returns true if clamped.
bool advance(const ClosedLoop& loop, const TimeStep& ts, Vec& x, std::span<double> profile,
             Vec& v, std::size_t step) {
  loop.game().dynamics(x, profile, v);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += ts.h * v[k];
  if (!all_finite(x))
    throw DivergenceError("non-finite state at step " + std::to_string(step + 1), step + 1);
  return loop.game().state_domain.clamp(x);
}

}  // namespace

DiscreteTrajectory rollout_discrete(const GameDefinition& game,
                                    std::span<const StrategyField> strategies,
                                    std::span<const double> x0, const TimeStep& ts,
                                    std::size_t n_steps) {
  check_x0(game, x0);
  if (n_steps < 1) throw InvalidInput("rollout needs at least one step");
  const ClosedLoop loop(game, strategies);
  DiscreteTrajectory traj;
  traj.h = ts.h;
  traj.states.reserve(n_steps + 1);
  traj.states.emplace_back(x0.begin(), x0.end());
  Vec x(x0.begin(), x0.end());
  Vec profile(loop.profile_size());
  Vec v(x.size());
  for (std::size_t n = 0; n < n_steps; ++n) {
    loop.controls(x, profile);
    traj.controls.push_back(loop.split(profile));
    traj.clamped.push_back(advance(loop, ts, x, profile, v, n));
    traj.states.push_back(x);
  }
  return traj;
}

double payoff_bound(const GameDefinition& game) { return resolve_constants(game).payoff_bound; }

double discrete_payoff_partial(const GameDefinition& game, int player,
                               std::span<const StrategyField> strategies,
                               std::span<const double> x0, const TimeStep& ts,
                               std::size_t n_steps) {
  check_x0(game, x0);
  if (player < 0 || player >= game.n_players) throw InvalidInput("player index out of range");
  const ClosedLoop loop(game, strategies);
  Vec x(x0.begin(), x0.end());
  Vec profile(loop.profile_size());
  Vec v(x.size());
  Accumulator sum;
  for (std::size_t n = 0; n < n_steps; ++n) {
    loop.controls(x, profile);
    sum.add(std::pow(ts.beta, static_cast<double>(n)) * loop.payoff(player, x, profile));
    advance(loop, ts, x, profile, v, n);
  }
  return ts.h * sum.value();
}

PayoffEstimate discrete_payoff(const GameDefinition& game, int player,
                               std::span<const StrategyField> strategies,
                               std::span<const double> x0, const TimeStep& ts, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("discrete_payoff: tol must be positive");
  const double m = payoff_bound(game);
  // Tail after J steps is at most M beta^J h / (1 - beta) = (M / rho) beta^J.
  auto tail = [&](std::size_t j) {
    return m * std::pow(ts.beta, static_cast<double>(j)) * ts.h / (1.0 - ts.beta);
  };
  std::size_t steps = 0;
  if (tail(0) > tol) {
    steps = static_cast<std::size_t>(std::ceil(std::log(tol / tail(0)) / std::log(ts.beta)));
    while (steps > 0 && tail(steps - 1) <= tol) --steps;
    while (tail(steps) > tol) ++steps;
  }
  PayoffEstimate est;
  est.value = discrete_payoff_partial(game, player, strategies, x0, ts, steps);
  est.error_bound = tail(steps);
  est.steps = steps;
  est.horizon = static_cast<double>(steps) * ts.h;
  return est;
}

void write_trajectory_csv(std::ostream& out, const GameDefinition& game,
                          const DiscreteTrajectory& traj) {
  std::vector<std::string> header = {"step", "t"};
  for (int k = 0; k < game.state_dim; ++k) header.push_back("x" + std::to_string(k + 1));
  for (int i = 0; i < game.n_players; ++i)
    for (int k = 0; k < game.control_dims[i]; ++k)
      header.push_back("u" + std::to_string(i) + "_" + std::to_string(k + 1));
  header.emplace_back("clamped");
  CsvWriter csv(out, header);
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    csv << n << static_cast<double>(n) * traj.h;
    csv.row(traj.states[n]);
    // Row n holds the controls applied at x_n and whether x_{n+1} was clamped;
    // the final state has neither.
    if (n < traj.steps()) {
      for (const auto& u : traj.controls[n]) csv.row(u);
      csv << (traj.clamped[n] ? 1 : 0);
    } else {
      for (int i = 0; i < game.n_players; ++i)
        for (int k = 0; k < game.control_dims[i]; ++k) csv << "";
      csv << 0;
    }
    csv.end_row();
  }
}

}  // namespace dgame
