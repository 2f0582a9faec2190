#include "dgame/continuous_payoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dgame/closed_loop.hpp"
#include "dgame/csv.hpp"
#include "dgame/errors.hpp"

namespace dgame {

namespace {

class Rk4 {
 public:
  explicit Rk4(const ClosedLoop& loop)
      : loop_(loop),
        n_(loop.game().state_dim),
        profile_(loop.profile_size()),
        k1_(n_), k2_(n_), k3_(n_), k4_(n_), stage_(n_) {}

  // Advances x by dt; returns true if the result was projected onto the box.
  bool step(Vec& x, double dt) {
    eval(x, k1_);
    stage(x, k1_, 0.5 * dt);
    eval(stage_, k2_);
    stage(x, k2_, 0.5 * dt);
    eval(stage_, k3_);
    stage(x, k3_, dt);
    eval(stage_, k4_);
    for (std::size_t d = 0; d < n_; ++d)
      x[d] += dt / 6.0 * (k1_[d] + 2.0 * k2_[d] + 2.0 * k3_[d] + k4_[d]);
    return loop_.game().state_domain.clamp(x);
  }

 private:
  void eval(const Vec& x, Vec& out) { loop_.velocity(x, profile_, out); }
  void stage(const Vec& x, const Vec& k, double c) {
    for (std::size_t d = 0; d < n_; ++d) stage_[d] = x[d] + c * k[d];
    loop_.game().state_domain.clamp(stage_);
  }

  const ClosedLoop& loop_;
  std::size_t n_;
  Vec profile_, k1_, k2_, k3_, k4_, stage_;
};

ContinuousTrajectory integrate_steps(const ClosedLoop& loop, std::span<const double> x0,
                                     std::size_t steps, double dt) {
  ContinuousTrajectory traj;
  traj.dt = dt;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  Vec x(x0.begin(), x0.end());
  traj.clamped.push_back(loop.game().state_domain.clamp(x));
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  Rk4 rk(loop);
  for (std::size_t k = 0; k < steps; ++k) {
    const bool clamped = rk.step(x, dt);
    if (!all_finite(x))
      throw DivergenceError("non-finite state at RK4 step " + std::to_string(k + 1), k + 1);
    traj.times.push_back(static_cast<double>(k + 1) * dt);
    traj.states.push_back(x);
    traj.clamped.push_back(clamped);
  }
  return traj;
}

void check_inputs(const GameDefinition& game, std::span<const double> x0, double dt) {
  if (x0.size() != static_cast<std::size_t>(game.state_dim))
    throw InvalidInput("initial state has dimension " + std::to_string(x0.size()));
  if (!all_finite(x0)) throw InvalidInput("initial state is not finite");
  if (!game.state_domain.contains(x0)) throw InvalidInput("initial state lies outside the state box");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
}

double growth_envelope(double x_norm, double k, double t) {
  return (x_norm + std::sqrt(2.0 * k * t)) * std::exp(k * t);
}

}  // namespace

ContinuousTrajectory integrate_closed_loop(const GameDefinition& game,
                                           std::span<const StrategyField> strategies,
                                           std::span<const double> x0, double horizon, double dt) {
  check_inputs(game, x0, dt);
  if (!(horizon >= dt)) throw InvalidInput("horizon must be at least dt");
  const ClosedLoop loop(game, strategies);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  return integrate_steps(loop, x0, steps, dt);
}

PayoffEstimate continuous_payoff(const GameDefinition& game, int player,
                                 std::span<const StrategyField> strategies,
                                 std::span<const double> x0, double tol, double dt) {
  check_inputs(game, x0, dt);
  if (!(tol > 0.0)) throw InvalidInput("continuous_payoff: tol must be positive");
  if (player < 0 || player >= game.n_players) throw InvalidInput("player index out of range");
  const double rho = game.discount_rate;
  const double m = payoff_bound(game);

  const double needed = m > 0.0 ? std::max(0.0, std::log(2.0 * m / (rho * tol)) / rho) : 0.0;
  std::size_t steps = static_cast<std::size_t>(std::ceil(needed / dt));
  steps = std::max<std::size_t>(4, (steps + 3) / 4 * 4);
  const double horizon = static_cast<double>(steps) * dt;

  const ClosedLoop loop(game, strategies);
  const ContinuousTrajectory traj = integrate_steps(loop, x0, steps, dt);

  Vec integrand(steps + 1);
  Vec profile(loop.profile_size());
  for (std::size_t k = 0; k <= steps; ++k) {
    loop.controls(traj.states[k], profile);
    integrand[k] = std::exp(-rho * traj.times[k]) * loop.payoff(player, traj.states[k], profile);
  }

  auto simpson = [&](std::size_t stride) {
    const std::size_t n = steps / stride;
    double sum = integrand[0] + integrand[steps];
    for (std::size_t j = 1; j < n; ++j) sum += (j % 2 == 1 ? 4.0 : 2.0) * integrand[j * stride];
    return sum * (dt * static_cast<double>(stride)) / 3.0;
  };
  const double fine = simpson(1);
  const double coarse = simpson(2);

  PayoffEstimate est;
  est.value = fine;
  est.error_bound = m / rho * std::exp(-rho * horizon) + std::abs(fine - coarse);
  est.steps = steps;
  est.horizon = horizon;
  return est;
}

GrowthReport growth_bound_check(const ContinuousTrajectory& traj, double growth_const,
                                 std::span<const double> x0) {
  if (growth_const < 0.0) throw InvalidInput("growth constant must be nonnegative");
  // For K = 0 the envelope reduces to |x0|, which is exact since g vanishes.
  const double x_norm = norm2(x0);
  GrowthReport r;
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double margin = growth_envelope(x_norm, growth_const, traj.times[k]) - norm2(traj.states[k]);
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_time = traj.times[k];
    }
  }
  // Allow for rounding in |y| at t = 0 where the envelope is tight.
  r.satisfied = r.worst_margin >= -1e-12 * std::max(1.0, x_norm);
  return r;
}

GapReport gronwall_gap_check(const GameDefinition& game, std::span<const StrategyField> strategies,
                             std::span<const double> x0, const TimeStep& ts, double horizon,
                             const HypothesisData& constants, int substeps) {
  check_inputs(game, x0, ts.h);
  if (substeps < 1) throw InvalidInput("substeps must be >= 1");
  if (!(horizon >= ts.h)) throw InvalidInput("horizon must be at least h");
  const auto coarse_steps = static_cast<std::size_t>(std::ceil(horizon / ts.h - 1e-9));
  const auto sub = static_cast<std::size_t>(substeps);

  const DiscreteTrajectory euler = rollout_discrete(game, strategies, x0, ts, coarse_steps);
  const ClosedLoop loop(game, strategies);
  const ContinuousTrajectory rk = integrate_steps(loop, x0, coarse_steps * sub, ts.h / substeps);

  GapReport r;
  r.h = ts.h;
  for (const auto& s : strategies)
    r.measured_strategy_lip = std::max(r.measured_strategy_lip, strategy_lipschitz(s));
  r.lipschitz_precondition = r.measured_strategy_lip <= constants.strategy_lip * (1.0 + 1e-12);

  const double k = constants.growth_const;
  const double lip = constants.combined_lip();
  const double x_norm = norm2(x0);
  r.worst_margin = std::numeric_limits<double>::infinity();
  // Samples at t_n + j dt for j < substeps cover [0, T); the endpoint T
  // belongs to the next interval and is left out.
  const std::size_t samples = coarse_steps * sub;
  for (std::size_t idx = 0; idx < samples; ++idx) {
    const double t = rk.times[idx];
    const Vec& y = rk.states[idx];
    const Vec& yt = euler.states[idx / sub];
    const double gap = distance2(y, yt);
    const double bound = k * ts.h * (1.0 + growth_envelope(x_norm, k, t)) * std::exp(lip * t);
    r.times.push_back(t);
    r.continuous.push_back(y);
    r.discrete.push_back(yt);
    r.gap.push_back(gap);
    r.bound.push_back(bound);
    r.max_gap = std::max(r.max_gap, gap);
    r.worst_margin = std::min(r.worst_margin, bound - gap);
  }
  r.satisfied = r.worst_margin >= 0.0;
  return r;
}

void write_continuous_csv(std::ostream& out, const ContinuousTrajectory& traj) {
  std::vector<std::string> header = {"t"};
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  for (std::size_t d = 0; d < n; ++d) header.push_back("y" + std::to_string(d + 1));
  header.emplace_back("clamped");
  CsvWriter csv(out, header);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    csv << traj.times[k];
    csv.row(traj.states[k]);
    csv << (traj.clamped[k] ? 1 : 0);
    csv.end_row();
  }
}

void write_gap_csv(std::ostream& out, const GapReport& report) {
  std::vector<std::string> header = {"t"};
  const std::size_t n = report.continuous.empty() ? 0 : report.continuous.front().size();
  for (std::size_t d = 0; d < n; ++d) header.push_back("y" + std::to_string(d + 1));
  for (std::size_t d = 0; d < n; ++d) header.push_back("ytilde" + std::to_string(d + 1));
  header.emplace_back("gap");
  header.emplace_back("bound");
  CsvWriter csv(out, header);
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    csv << report.times[k];
    csv.row(report.continuous[k]);
    csv.row(report.discrete[k]);
    csv << report.gap[k] << report.bound[k];
    csv.end_row();
  }
}

}  // namespace dgame
