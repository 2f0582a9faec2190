#include "dgame/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "dgame/certifier.hpp"
#include "dgame/continuous_payoff.hpp"
#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/games.hpp"
#include "dgame/io.hpp"
#include "dgame/nash_solver.hpp"
#include "dgame/run_config.hpp"

namespace dgame {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string solution;
  std::string x0;
  int threads = 0;
};

struct Context {
  RunConfig cfg;
  GameDefinition game;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

Context load_context(const Options& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(opts.config);
  if (opts.threads > 0) cfg.solver.threads = opts.threads;
  GameDefinition game = build_game(cfg);
  fs::path dir = opts.out.empty() ? fs::path(cfg.output) : fs::path(opts.out);
  return Context{std::move(cfg), std::move(game), std::move(dir), out, err};
}

// --- YAML helpers -----------------------------------------------------------

void kv(YAML::Emitter& y, const char* key, double v) {
  y << YAML::Key << key << YAML::Value << format_number(v);
}

void kv_vec(YAML::Emitter& y, const char* key, std::span<const double> v) {
  y << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double c : v) y << format_number(c);
  y << YAML::EndSeq;
}

void emit_constants(YAML::Emitter& y, const HypothesisData& c, const RateMargins& m) {
  y << YAML::Key << "constants" << YAML::Value << YAML::BeginMap;
  kv(y, "lip_dynamics", c.lip_dynamics);
  kv_vec(y, "lip_payoffs", c.lip_payoffs);
  kv(y, "payoff_bound", c.payoff_bound);
  kv(y, "growth_const", c.growth_const);
  kv(y, "strategy_lip", c.strategy_lip);
  kv(y, "combined_lip", c.combined_lip());
  if (c.dynamics_sup) kv(y, "dynamics_sup", *c.dynamics_sup);
  y << YAML::EndMap;
  y << YAML::Key << "rate_condition" << YAML::Value << YAML::BeginMap;
  if (m.bounded_dynamics) kv(y, "rho_minus_L", *m.bounded_dynamics);
  kv(y, "rho_minus_L_minus_K", m.growth);
  y << YAML::Key << "satisfied" << YAML::Value << m.applies();
  y << YAML::EndMap;
}

double max_strategy_lip(std::span<const StrategyField> s) {
  double l = 0.0;
  for (const auto& f : s) l = std::max(l, strategy_lipschitz(f));
  return l;
}

Vec parse_state(const std::string& text) {
  Vec x;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) x.push_back(parse_number(item));
  return x;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
  return s;
}

// --- commands -----------------------------------------------------------------

int cmd_solve(const Options& opts, std::ostream& out, std::ostream& err) {
  Context c = load_context(opts, out, err);
  const Grid grid = build_grid(c.cfg, c.game);
  const TimeStep ts = make_timestep(c.game.discount_rate, require_h(c.cfg));
  try {
    const NashSolution sol = solve_nash(c.game, grid, ts, c.cfg.solver);
    save_solution(c.out_dir, c.cfg, c.game, sol);
    out << "converged after " << sol.diagnostics.outer_sweeps << " sweep(s); bellman residuals "
        << join(sol.diagnostics.bellman_residuals) << "\n";
    out << "wrote " << c.out_dir.string() << "\n";
    return kExitOk;
  } catch (const NashNonConvergence& e) {
    save_solution(c.out_dir, c.cfg, c.game, e.last_iterate());
    err << "error: " << e.what() << "\n";
    err << "last iterate written to " << c.out_dir.string() << "\n";
    return kExitRuntimeFailure;
  }
}

std::vector<std::vector<NamedStrategy>> riccati_extras(const Context& c, const NashSolution& sol,
                                                       std::vector<std::string>& notes) {
  std::vector<std::vector<NamedStrategy>> extra(c.game.n_players);
  if (!c.cfg.certify.include_riccati) return extra;
  const auto ric = riccati_for(c.game);
  if (!ric) return extra;
  for (int i = 0; i < c.game.n_players; ++i) {
    StrategyField s = linear_feedback(sol.strategies[i].grid(), c.game.control_sets[i], ric->k);
    if (strategy_lipschitz(s) > c.cfg.certify.ls_cap) {
      notes.push_back("riccati strategy of player " + std::to_string(i) + " exceeds ls_cap; left out");
      continue;
    }
    extra[i].push_back(NamedStrategy{"riccati", std::move(s)});
  }
  return extra;
}

int cmd_certify(const Options& opts, std::ostream& out, std::ostream& err) {
  Context c = load_context(opts, out, err);
  if (opts.solution.empty()) throw InvalidInput("certify needs --solution");
  const LoadedSolution loaded = load_solution(opts.solution, c.game);
  check_matches(loaded.manifest, c.cfg);
  const NashSolution& sol = loaded.solution;
  const auto& cc = c.cfg.certify;
  if (cc.x0.empty()) throw ConfigError(c.cfg.source, 0, "certify.x0", "missing");

  std::vector<std::string> notes;
  HypothesisData constants = resolve_constants(c.game, c.cfg.sample_count, c.cfg.seed);
  constants.strategy_lip = max_strategy_lip(sol.strategies);
  const RateMargins margins = rate_condition_margin(constants, c.game.discount_rate);

  std::vector<ConsistencyGap> gaps;
  double max_gap = 0.0;
  for (const auto& x0 : cc.x0) {
    gaps.push_back(consistency_gap(c.game, sol.strategies, x0, sol.ts, cc.tol, cc.dt));
    for (double g : gaps.back().gap) max_gap = std::max(max_gap, g);
  }

  EpsilonConfig ecfg;
  ecfg.family_size = cc.family_size;
  ecfg.seed = cc.seed;
  ecfg.ls_cap = cc.ls_cap;
  ecfg.tol = cc.tol;
  ecfg.dt = cc.dt;
  ecfg.max_residual = cc.max_residual;
  ecfg.extra = riccati_extras(c, sol, notes);
  std::optional<EpsilonReport> eps;
  std::string refusal;
  try {
    eps = epsilon_nash_check(c.game, sol, cc.x0, ecfg);
  } catch (const CertificationRefused& e) {
    refusal = e.what();
  }

  const bool gap_ok = max_gap <= cc.max_gap;
  const bool eps_ok = eps && eps->global <= cc.max_epsilon;
  const bool pass = gap_ok && eps_ok;

  std::ostringstream gap_csv;
  {
    std::vector<std::string> header = {"h", "player"};
    const std::size_t n = cc.x0.front().size();
    if (n == 1)
      header.emplace_back("x0");
    else
      for (std::size_t d = 0; d < n; ++d) header.push_back("x0_" + std::to_string(d + 1));
    header.emplace_back("gap");
    header.emplace_back("budget");
    CsvWriter csv(gap_csv, header);
    for (int i = 0; i < c.game.n_players; ++i)
      for (std::size_t s = 0; s < cc.x0.size(); ++s) {
        csv << sol.ts.h << i;
        csv.row(cc.x0[s]);
        csv << gaps[s].gap[i] << gaps[s].budget[i];
        csv.end_row();
      }
  }
  write_text(c.out_dir / "gaps.csv", gap_csv.str());
  if (eps) {
    std::ostringstream eps_csv;
    write_epsilon_csv(eps_csv, *eps);
    write_text(c.out_dir / "epsilon.csv", eps_csv.str());
  }

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "game" << YAML::Value << c.game.name;
  kv(y, "rho", c.game.discount_rate);
  kv(y, "h", sol.ts.h);
  y << YAML::Key << "x0" << YAML::Value << YAML::BeginSeq;
  for (const auto& x : cc.x0) {
    y << YAML::Flow << YAML::BeginSeq;
    for (double v : x) y << format_number(v);
    y << YAML::EndSeq;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "consistency" << YAML::Value << YAML::BeginSeq;
  for (std::size_t s = 0; s < gaps.size(); ++s) {
    y << YAML::BeginMap;
    y << YAML::Key << "x0_index" << YAML::Value << s;
    kv_vec(y, "discrete", gaps[s].discrete);
    kv_vec(y, "continuous", gaps[s].continuous);
    kv_vec(y, "gap", gaps[s].gap);
    kv_vec(y, "budget", gaps[s].budget);
    y << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "epsilon" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "deviation_family" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "size" << YAML::Value << cc.family_size;
  y << YAML::Key << "seed" << YAML::Value << cc.seed;
  kv(y, "ls_cap", cc.ls_cap);
  y << YAML::Key << "note" << YAML::Value
    << "finite deterministic family; no claim is made about deviations outside it";
  y << YAML::EndMap;
  if (eps) {
    kv_vec(y, "per_player", eps->epsilon);
    kv(y, "global", eps->global);
    y << YAML::Key << "witnesses" << YAML::Value << YAML::BeginSeq;
    for (int i = 0; i < c.game.n_players; ++i) {
      y << YAML::Flow << YAML::BeginMap;
      y << YAML::Key << "player" << YAML::Value << i;
      y << YAML::Key << "deviation" << YAML::Value << eps->witness_deviation[i];
      kv_vec(y, "x0", eps->witness_x0[i]);
      y << YAML::EndMap;
    }
    y << YAML::EndSeq;
    y << YAML::Key << "members" << YAML::Value << YAML::BeginSeq;
    for (const auto& ids : eps->family) y << YAML::Flow << ids;
    y << YAML::EndSeq;
  } else {
    y << YAML::Key << "refused" << YAML::Value << refusal;
  }
  y << YAML::EndMap;
  y << YAML::Key << "hypotheses" << YAML::Value << YAML::BeginMap;
  emit_constants(y, constants, margins);
  y << YAML::EndMap;
  y << YAML::Key << "verdicts" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "consistency_gap" << YAML::Value << YAML::Flow << YAML::BeginMap;
  kv(y, "max", max_gap);
  kv(y, "threshold", cc.max_gap);
  y << YAML::Key << "pass" << YAML::Value << gap_ok << YAML::EndMap;
  y << YAML::Key << "epsilon" << YAML::Value << YAML::Flow << YAML::BeginMap;
  if (eps) kv(y, "observed", eps->global);
  kv(y, "threshold", cc.max_epsilon);
  y << YAML::Key << "pass" << YAML::Value << eps_ok << YAML::EndMap;
  y << YAML::Key << "pass" << YAML::Value << pass;
  y << YAML::EndMap;
  if (!notes.empty()) y << YAML::Key << "notes" << YAML::Value << notes;
  y << YAML::EndMap;
  write_text(c.out_dir / "certification.yaml", std::string(y.c_str()) + "\n");

  out << "max consistency gap " << format_number(max_gap) << " (threshold "
      << format_number(cc.max_gap) << ")\n";
  if (eps)
    out << "observed epsilon " << format_number(eps->global) << " (threshold "
        << format_number(cc.max_epsilon) << ")\n";
  else
    err << "epsilon check refused: " << refusal << "\n";
  out << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitCertificationFailed;
}

int cmd_rates(const Options& opts, std::ostream& out, std::ostream& err) {
  Context c = load_context(opts, out, err);
  if (c.cfg.h_list.empty()) throw ConfigError(c.cfg.source, 0, "time.h_list", "missing");
  const std::vector<Vec>& x0 = c.cfg.rates.x0.empty() ? c.cfg.certify.x0 : c.cfg.rates.x0;
  if (x0.empty()) throw ConfigError(c.cfg.source, 0, "rates.x0", "missing (and no certify.x0)");
  const Grid grid = build_grid(c.cfg, c.game);

  // Solve from the coarsest step down, warm-starting each solve.
  std::optional<WarmStart> warm;
  std::optional<NashSolution> finest;
  std::vector<int> sweeps;
  for (double h : c.cfg.h_list) {
    const TimeStep ts = make_timestep(c.game.discount_rate, h);
    try {
      NashSolution sol = solve_nash(c.game, grid, ts, c.cfg.solver, warm);
      sweeps.push_back(sol.diagnostics.outer_sweeps);
      warm = WarmStart{sol.values, sol.strategies};
      finest = std::move(sol);
    } catch (const NashNonConvergence& e) {
      err << "error: solve at h = " << format_number(h) << ": " << e.what() << "\n";
      return kExitRuntimeFailure;
    }
  }

  RateStudyOptions ro;
  ro.tol = c.cfg.rates.tol;
  ro.dt = c.cfg.rates.dt;
  const RateStudy study = rate_study(c.game, finest->strategies, x0, c.cfg.h_list, ro);

  std::ostringstream table, plot;
  write_gap_table_csv(table, study);
  write_rate_plot_csv(plot, study);
  write_text(c.out_dir / "rates.csv", table.str());
  write_text(c.out_dir / "rate_plot.csv", plot.str());

  // h0: largest tested step whose gaps all stay within certify.max_gap.
  std::optional<double> h0;
  for (double h : c.cfg.h_list) {
    bool ok = true;
    for (const auto& row : study.table)
      if (row.h == h && row.gap > c.cfg.certify.max_gap) ok = false;
    if (ok) {
      h0 = h;
      break;
    }
  }

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "game" << YAML::Value << c.game.name;
  kv_vec(y, "h_list", c.cfg.h_list);
  y << YAML::Key << "solver_sweeps" << YAML::Value << YAML::Flow << sweeps;
  y << YAML::Key << "label" << YAML::Value << study.label;
  y << YAML::Key << "degenerate" << YAML::Value << study.degenerate;
  kv(y, "slope", study.slope);
  kv(y, "constant", study.constant);
  y << YAML::Key << "points_used" << YAML::Value << study.points_used;
  y << YAML::Key << "points_total" << YAML::Value << study.table.size();
  if (h0) kv(y, "h0", *h0);
  emit_constants(y, study.constants, study.margins);
  if (!study.warnings.empty()) y << YAML::Key << "warnings" << YAML::Value << study.warnings;
  y << YAML::EndMap;
  write_text(c.out_dir / "rates.yaml", std::string(y.c_str()) + "\n");

  for (const auto& w : study.warnings) err << "warning: " << w << "\n";
  if (study.degenerate)
    out << study.label << "\n";
  else
    out << "slope " << format_number(study.slope) << ", constant " << format_number(study.constant)
        << " (" << study.label << ")\n";
  return kExitOk;
}

int cmd_simulate(const Options& opts, std::ostream& out, std::ostream& err) {
  Context c = load_context(opts, out, err);
  if (opts.solution.empty()) throw InvalidInput("simulate needs --solution");
  const LoadedSolution loaded = load_solution(opts.solution, c.game);
  check_matches(loaded.manifest, c.cfg);
  const NashSolution& sol = loaded.solution;
  const Vec x0 = opts.x0.empty() ? c.cfg.simulate.x0 : parse_state(opts.x0);
  if (x0.size() != static_cast<std::size_t>(c.game.state_dim))
    throw InvalidInput("x0 needs " + std::to_string(c.game.state_dim) + " coordinate(s)");
  if (!c.game.state_domain.contains(x0)) throw InvalidInput("x0 lies outside the state box");
  const double horizon = c.cfg.simulate.horizon;
  const int substeps = c.cfg.simulate.substeps;

  HypothesisData constants = resolve_constants(c.game, c.cfg.sample_count, c.cfg.seed);
  constants.strategy_lip = max_strategy_lip(sol.strategies);

  try {
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / sol.ts.h - 1e-9));
    const DiscreteTrajectory disc = rollout_discrete(c.game, sol.strategies, x0, sol.ts, steps);
    const ContinuousTrajectory cont =
        integrate_closed_loop(c.game, sol.strategies, x0, horizon, sol.ts.h / substeps);
    const GapReport gap =
        gronwall_gap_check(c.game, sol.strategies, x0, sol.ts, horizon, constants, substeps);
    const GrowthReport growth = growth_bound_check(cont, constants.growth_const, x0);

    std::ostringstream d, k, g;
    write_trajectory_csv(d, c.game, disc);
    write_continuous_csv(k, cont);
    write_gap_csv(g, gap);
    write_text(c.out_dir / "discrete.csv", d.str());
    write_text(c.out_dir / "continuous.csv", k.str());
    write_text(c.out_dir / "gronwall.csv", g.str());

    YAML::Emitter y;
    y << YAML::BeginMap;
    kv_vec(y, "x0", x0);
    kv(y, "h", sol.ts.h);
    kv(y, "horizon", horizon);
    y << YAML::Key << "substeps" << YAML::Value << substeps;
    y << YAML::Key << "gronwall" << YAML::Value << YAML::BeginMap;
    kv(y, "max_gap", gap.max_gap);
    kv(y, "worst_margin", gap.worst_margin);
    y << YAML::Key << "satisfied" << YAML::Value << gap.satisfied;
    y << YAML::EndMap;
    y << YAML::Key << "growth" << YAML::Value << YAML::BeginMap;
    kv(y, "worst_margin", growth.worst_margin);
    y << YAML::Key << "satisfied" << YAML::Value << growth.satisfied;
    y << YAML::EndMap;
    emit_constants(y, constants, rate_condition_margin(constants, c.game.discount_rate));
    y << YAML::EndMap;
    write_text(c.out_dir / "simulate.yaml", std::string(y.c_str()) + "\n");

    out << "max |y - ytilde| " << format_number(gap.max_gap) << "; bound "
        << (gap.satisfied ? "holds" : "VIOLATED") << "\n";
    if (!gap.satisfied || !growth.satisfied) err << "warning: trajectory bound violated\n";
    return kExitOk;
  } catch (const DivergenceError& e) {
    err << "error: divergence at step " << e.step() << ": " << e.what() << "\n";
    return kExitRuntimeFailure;
  }
}

int cmd_check_hypotheses(const Options& opts, std::ostream& out, std::ostream& err) {
  Context c = load_context(opts, out, err);
  const HypothesisData sampled = estimate_constants(c.game, c.cfg.sample_count, c.cfg.seed);
  HypothesisData resolved = resolve_constants(c.game, c.cfg.sample_count, c.cfg.seed);
  if (!opts.solution.empty()) {
    const LoadedSolution loaded = load_solution(opts.solution, c.game);
    check_matches(loaded.manifest, c.cfg);
    resolved.strategy_lip = max_strategy_lip(loaded.solution.strategies);
  }
  const double rho = c.game.discount_rate;
  const RateMargins margins = rate_condition_margin(resolved, rho);

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "game" << YAML::Value << c.game.name;
  kv(y, "rho", rho);
  y << YAML::Key << "source" << YAML::Value
    << (c.game.analytic_constants ? "analytic" : "sampled");
  emit_constants(y, resolved, margins);
  y << YAML::Key << "sampled" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "sample_count" << YAML::Value << c.cfg.sample_count;
  kv(y, "lip_dynamics", sampled.lip_dynamics);
  kv_vec(y, "lip_payoffs", sampled.lip_payoffs);
  kv(y, "payoff_bound", sampled.payoff_bound);
  kv(y, "growth_const", sampled.growth_const);
  y << YAML::EndMap;
  if (opts.solution.empty())
    y << YAML::Key << "note" << YAML::Value
      << "strategy_lip is 0 without --solution; margins assume constant strategies";
  y << YAML::EndMap;
  write_text(c.out_dir / "hypotheses.yaml", std::string(y.c_str()) + "\n");
  out << y.c_str() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-Lagrangian Nash solver and certifier for differential games", "dgame"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "run configuration (YAML)")->required();
    sub->add_option("--out", opts.out, "output directory (overrides the config)");
    sub->add_option("--threads", opts.threads, "worker threads for the solver")
        ->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "solve the discrete game, write value/strategy CSVs");
  add_common(solve);
  auto* certify = app.add_subcommand("certify", "consistency gaps and epsilon-Nash check");
  add_common(certify);
  certify->add_option("--solution", opts.solution, "solution directory")->required();
  auto* rates = app.add_subcommand("rates", "consistency rate study over time.h_list");
  add_common(rates);
  auto* simulate = app.add_subcommand("simulate", "closed-loop trajectories and Gronwall curves");
  add_common(simulate);
  simulate->add_option("--solution", opts.solution, "solution directory")->required();
  simulate->add_option("--x0", opts.x0, "initial state, comma separated");
  auto* hyp = app.add_subcommand("check-hypotheses", "report regularity constants and margins");
  add_common(hyp);
  hyp->add_option("--solution", opts.solution, "solution directory (for the strategy constant)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (solve->parsed()) return cmd_solve(opts, out, err);
    if (certify->parsed()) return cmd_certify(opts, out, err);
    if (rates->parsed()) return cmd_rates(opts, out, err);
    if (simulate->parsed()) return cmd_simulate(opts, out, err);
    return cmd_check_hypotheses(opts, out, err);
  } catch (const std::invalid_argument& e) {  // InvalidInput, InvalidStep, ConfigError, ...
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NashNonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeFailure;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeFailure;
  } catch (const DivergenceError& e) {
    err << "error: divergence at step " << e.step() << ": " << e.what() << "\n";
    return kExitRuntimeFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace dgame
