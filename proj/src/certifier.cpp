#include "dgame/certifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "dgame/continuous_payoff.hpp"
#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/random.hpp"

namespace dgame {

ConsistencyGap consistency_gap(const GameDefinition& game, std::span<const StrategyField> strategies,
                               std::span<const double> x0, const TimeStep& ts, double tol,
                               double dt) {
  if (dt <= 0.0) dt = ts.h / 20.0;
  ConsistencyGap out;
  for (int i = 0; i < game.n_players; ++i) {
    const PayoffEstimate d = discrete_payoff(game, i, strategies, x0, ts, tol);
    const PayoffEstimate c = continuous_payoff(game, i, strategies, x0, tol, dt);
    out.discrete.push_back(d.value);
    out.continuous.push_back(c.value);
    out.gap.push_back(std::abs(d.value - c.value));
    out.budget.push_back(d.error_bound + c.error_bound);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate study

namespace {

void x0_header(std::vector<std::string>& header, std::size_t dim) {
  if (dim == 1) {
    header.emplace_back("x0");
    return;
  }
  for (std::size_t d = 0; d < dim; ++d) header.push_back("x0_" + std::to_string(d + 1));
}

double max_strategy_lipschitz(std::span<const StrategyField> strategies) {
  double l = 0.0;
  for (const auto& s : strategies) l = std::max(l, strategy_lipschitz(s));
  return l;
}

}  // namespace

RateStudy rate_study(const GameDefinition& game, std::span<const StrategyField> strategies,
                     std::span<const Vec> x0_samples, std::span<const double> h_list,
                     const RateStudyOptions& opts) {
  if (h_list.size() < 3) throw InvalidInput("rate_study: h_list needs at least 3 entries");
  for (std::size_t k = 1; k < h_list.size(); ++k)
    if (!(h_list[k] < h_list[k - 1]))
      throw InvalidInput("rate_study: h_list must be strictly decreasing");
  if (x0_samples.empty()) throw InvalidInput("rate_study: no initial states");
  const double rho = game.discount_rate;
  std::vector<TimeStep> steps;
  for (double h : h_list) steps.push_back(make_timestep(rho, h));

  RateStudy study;
  study.constants = resolve_constants(game);
  study.constants.strategy_lip = max_strategy_lipschitz(strategies);
  study.margins = rate_condition_margin(study.constants, rho);
  study.guaranteed_regime = study.margins.applies();

  const double dt = opts.dt > 0.0 ? opts.dt : h_list.back() / 20.0;
  std::vector<std::vector<PayoffEstimate>> reference(game.n_players);
  for (int i = 0; i < game.n_players; ++i)
    for (const auto& x0 : x0_samples)
      reference[i].push_back(continuous_payoff(game, i, strategies, x0, opts.tol, dt));

  for (const auto& ts : steps) {
    for (int i = 0; i < game.n_players; ++i) {
      for (std::size_t s = 0; s < x0_samples.size(); ++s) {
        const PayoffEstimate d = discrete_payoff(game, i, strategies, x0_samples[s], ts, opts.tol);
        GapRow row;
        row.h = ts.h;
        row.player = i;
        row.x0 = x0_samples[s];
        row.gap = std::abs(d.value - reference[i][s].value);
        row.budget = d.error_bound + reference[i][s].error_bound;
        row.excluded = !(row.gap > row.budget);
        study.table.push_back(std::move(row));
      }
    }
  }

  std::size_t excluded = 0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  Vec used_h;
  for (const auto& row : study.table) {
    if (row.excluded) {
      ++excluded;
      continue;
    }
    const double lx = std::log(row.h), ly = std::log(row.gap);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++study.points_used;
    if (std::find(used_h.begin(), used_h.end(), row.h) == used_h.end()) used_h.push_back(row.h);
  }
  if (excluded > 0)
    study.warnings.push_back(std::to_string(excluded) +
                             " point(s) below the evaluator noise floor were excluded from the fit");

  if (study.points_used == 0) {
    study.degenerate = true;
    study.label = "degenerate: exact scheme";
    return study;
  }
  if (used_h.size() < 2) {
    study.warnings.emplace_back("fewer than two step sizes above the noise floor; no slope fitted");
  } else {
    const double n = static_cast<double>(study.points_used);
    study.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    study.constant = std::exp((sy - study.slope * sx) / n);
  }
  study.label = study.guaranteed_regime ? "guaranteed regime" : "outside guaranteed regime";
  return study;
}

void write_gap_table_csv(std::ostream& out, const RateStudy& study) {
  std::vector<std::string> header = {"h", "player"};
  x0_header(header, study.table.empty() ? 1 : study.table.front().x0.size());
  header.emplace_back("gap");
  header.emplace_back("budget");
  CsvWriter csv(out, header);
  for (const auto& row : study.table) {
    csv << row.h << row.player;
    csv.row(row.x0);
    csv << row.gap << row.budget;
    csv.end_row();
  }
}

void write_rate_plot_csv(std::ostream& out, const RateStudy& study) {
  std::vector<std::string> header = {"log_h", "log_gap", "player"};
  x0_header(header, study.table.empty() ? 1 : study.table.front().x0.size());
  CsvWriter csv(out, header);
  for (const auto& row : study.table) {
    if (row.excluded) continue;
    csv << std::log(row.h) << std::log(row.gap) << row.player;
    csv.row(row.x0);
    csv.end_row();
  }
}

// ---------------------------------------------------------------------------
// Deviation family

namespace {

std::uint64_t member_seed(std::uint64_t seed, int player, int member) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(player) * 1000003ULL +
                                                    static_cast<std::uint64_t>(member) + 1ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Wave {
  double amplitude;
  Vec frequency;  // per state dimension, in half-periods over the box
  double phase;
};

StrategyField perturbed(const StrategyField& base, const std::vector<std::vector<Wave>>& waves,
                        double scale) {
  const Grid& grid = base.grid();
  const Box box = grid.box();
  const Box& cbox = base.control_box();
  const std::size_t m = base.control_dim();
  Vec controls = base.controls();
  Vec x(grid.dim());
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    grid.node(node, x);
    for (std::size_t j = 0; j < m; ++j) {
      double p = 0.0;
      for (const auto& w : waves[j]) {
        double arg = w.phase;
        for (std::size_t d = 0; d < grid.dim(); ++d)
          arg += std::numbers::pi * w.frequency[d] * (x[d] - box.lower[d]) /
                 (box.upper[d] - box.lower[d]);
        p += w.amplitude * std::sin(arg);
      }
      controls[node * m + j] += scale * p;
    }
    cbox.clamp(std::span<double>(controls).subspan(node * m, m));
  }
  return StrategyField(grid, cbox, std::move(controls));
}

}  // namespace

std::vector<Deviation> deviation_family(const GameDefinition& game, int player,
                                        const StrategyField& equilibrium, double ls_cap, int count,
                                        std::uint64_t seed, std::span<const NamedStrategy> extra) {
  if (count < 1) throw InvalidInput("deviation family needs count >= 1");
  if (player < 0 || player >= game.n_players) throw InvalidInput("player index out of range");
  const double eq_lip = strategy_lipschitz(equilibrium);
  if (eq_lip > ls_cap)
    throw InvalidInput("equilibrium strategy has Lipschitz constant " + format_number(eq_lip) +
                       " above the cap " + format_number(ls_cap));
  const Grid& grid = equilibrium.grid();
  const Box& cbox = equilibrium.control_box();
  const std::size_t m = cbox.dim();
  const auto n_count = static_cast<std::size_t>(count);

  std::vector<Deviation> family;
  auto push = [&](std::string id, StrategyField s) {
    const double l = strategy_lipschitz(s);
    if (l > ls_cap) return false;
    family.push_back(Deviation{std::move(id), std::move(s), l});
    return true;
  };
  push("equilibrium", equilibrium);

  // Constant strategies on a 5-level lattice of U_i.
  constexpr int kLevels = 5;
  std::size_t lattice_size = 1;
  for (std::size_t d = 0; d < m; ++d) lattice_size *= kLevels;
  for (std::size_t k = 0; k < lattice_size && family.size() < n_count; ++k) {
    Vec u(m);
    std::size_t rem = k;
    std::string id = "const";
    for (std::size_t d = m; d-- > 0;) {
      const int level = static_cast<int>(rem % kLevels);
      rem /= kLevels;
      u[d] = cbox.lower[d] + (cbox.upper[d] - cbox.lower[d]) * level / (kLevels - 1.0);
    }
    for (std::size_t d = 0; d < m; ++d) id += (d == 0 ? "[" : ";") + format_number(u[d]);
    push(id + "]", StrategyField::constant(grid, cbox, u));
  }

  const Vec mid = cbox.midpoint();
  for (double factor : {0.5, 0.9, 1.1, 1.5}) {
    if (family.size() >= n_count) break;
    Vec c = equilibrium.controls();
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = mid[k % m] + factor * (c[k] - mid[k % m]);
    for (std::size_t node = 0; node < grid.node_count(); ++node)
      cbox.clamp(std::span<double>(c).subspan(node * m, m));
    push("scale" + format_number(factor), StrategyField(grid, cbox, std::move(c)));
  }

  for (int r = 0; family.size() < n_count; ++r) {
    Rng rng(member_seed(seed, player, r));
    std::vector<std::vector<Wave>> waves(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double width = cbox.upper[j] - cbox.lower[j];
      for (int k = 0; k < 3; ++k) {
        Wave w;
        w.amplitude = 0.25 * width * rng.uniform(-1.0, 1.0);
        w.frequency.resize(grid.dim());
        for (auto& f : w.frequency) f = rng.uniform(0.5, 3.0);
        w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        waves[j].push_back(std::move(w));
      }
    }
    bool accepted = false;
    double scale = 1.0;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt, scale *= 0.5)
      accepted = push("random" + std::to_string(r), perturbed(equilibrium, waves, scale));
    if (!accepted)
      throw InvalidInput("could not build a perturbation within the Lipschitz cap");
  }

  for (const auto& e : extra) {
    if (!(e.strategy.grid() == grid) || e.strategy.control_dim() != m)
      throw InvalidInput("extra deviation '" + e.id + "' does not match the equilibrium grid");
    if (!push(e.id, e.strategy))
      throw InvalidInput("extra deviation '" + e.id + "' exceeds the Lipschitz cap");
  }
  return family;
}

// ---------------------------------------------------------------------------
// epsilon-Nash

EpsilonReport epsilon_nash_check(const GameDefinition& game, const NashSolution& sol,
                                 std::span<const Vec> x0_samples, const EpsilonConfig& cfg) {
  if (!sol.diagnostics.converged)
    throw CertificationRefused("solution did not converge; refusing to certify");
  for (std::size_t i = 0; i < sol.diagnostics.bellman_residuals.size(); ++i)
    if (sol.diagnostics.bellman_residuals[i] > cfg.max_residual)
      throw CertificationRefused("Bellman residual of player " + std::to_string(i) + " is " +
                                 format_number(sol.diagnostics.bellman_residuals[i]) +
                                 ", above the limit " + format_number(cfg.max_residual));
  if (x0_samples.empty()) throw InvalidInput("epsilon check needs initial states");
  const double dt = cfg.dt > 0.0 ? cfg.dt : sol.ts.h / 20.0;

  EpsilonReport report;
  for (int i = 0; i < game.n_players; ++i) {
    std::span<const NamedStrategy> extra;
    if (static_cast<std::size_t>(i) < cfg.extra.size()) extra = cfg.extra[i];
    const auto family = deviation_family(game, i, sol.strategies[i], cfg.ls_cap, cfg.family_size,
                                         cfg.seed, extra);
    std::vector<PayoffEstimate> base;
    for (const auto& x0 : x0_samples)
      base.push_back(continuous_payoff(game, i, sol.strategies, x0, cfg.tol, dt));

    // Ties go to the smallest (deviation id, x0) so the witness does not depend on order.
    double eps = 0.0;
    bool have = false;
    std::string witness;
    Vec witness_x0;
    std::vector<std::string> ids;
    std::vector<StrategyField> profile = sol.strategies;
    for (const auto& dev : family) {
      ids.push_back(dev.id);
      profile[i] = dev.strategy;
      for (std::size_t s = 0; s < x0_samples.size(); ++s) {
        const PayoffEstimate w = continuous_payoff(game, i, profile, x0_samples[s], cfg.tol, dt);
        EpsilonRow row{i, dev.id, s, x0_samples[s], w.value - base[s].value,
                       w.error_bound + base[s].error_bound};
        const double counted = row.delta > row.budget ? row.delta : 0.0;
        if (!have || counted > eps ||
            (counted == eps && std::tie(dev.id, x0_samples[s]) < std::tie(witness, witness_x0))) {
          have = true;
          eps = counted;
          witness = dev.id;
          witness_x0 = x0_samples[s];
        }
        report.rows.push_back(std::move(row));
      }
    }
    report.epsilon.push_back(eps);
    report.witness_deviation.push_back(witness);
    report.witness_x0.push_back(witness_x0);
    report.family.push_back(std::move(ids));
    report.global = std::max(report.global, eps);
  }
  return report;
}

void write_epsilon_csv(std::ostream& out, const EpsilonReport& report) {
  std::vector<std::string> header = {"player", "deviation"};
  x0_header(header, report.rows.empty() ? 1 : report.rows.front().x0.size());
  header.emplace_back("delta");
  CsvWriter csv(out, header);
  for (const auto& row : report.rows) {
    csv << row.player << row.deviation;
    csv.row(row.x0);
    csv << row.delta;
    csv.end_row();
  }
}

// ---------------------------------------------------------------------------
// HJB defect

std::vector<double> hjb_residual_lq(const GameDefinition& game, const NashSolution& sol,
                                    std::span<const Vec> sample_points, const SolverConfig& cfg) {
  const std::size_t n = game.state_dim;
  if (n > 2) throw InvalidInput("hjb_residual_lq supports state dimension 1 or 2");
  const Grid& grid = sol.values.front().grid();
  std::vector<double> out(game.n_players, 0.0);
  Vec profile(game.profile_size()), vel(n), grad(n), probe(n);
  std::array<std::size_t, 2> cell{};
  std::array<double, 2> weight{};
  for (int i = 0; i < game.n_players; ++i) {
    const GridFunction& v = sol.values[i];
    const ControlLattice lattice(game.control_sets[i], cfg.samples_for(i));
    const std::size_t own = game.control_offset(i);
    for (const auto& x : sample_points) {
      if (x.size() != n) throw InvalidInput("sample point has wrong dimension");
      grid.locate(x, std::span(cell.data(), n), std::span(weight.data(), n));
      for (std::size_t d = 0; d < n; ++d) {
        const double step = grid.axis(d)[cell[d] + 1] - grid.axis(d)[cell[d]];
        probe = x;
        probe[d] = x[d] + step;
        const double up = v.interpolate(probe);
        probe[d] = x[d] - step;
        grad[d] = (up - v.interpolate(probe)) / (2.0 * step);
      }
      for (int j = 0; j < game.n_players; ++j)
        if (j != i)
          sol.strategies[j].interpolate(
              x, std::span<double>(profile).subspan(game.control_offset(j), game.control_dims[j]));
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < lattice.size(); ++k) {
        const auto u = lattice.point(k);
        std::copy(u.begin(), u.end(), profile.begin() + static_cast<std::ptrdiff_t>(own));
        game.dynamics(x, profile, vel);
        double q = game.payoffs[i](x, profile);
        for (std::size_t d = 0; d < n; ++d) q += grad[d] * vel[d];
        best = std::max(best, q);
      }
      out[i] = std::max(out[i], std::abs(game.discount_rate * v.interpolate(x) - best));
    }
  }
  return out;
}

}  // namespace dgame
