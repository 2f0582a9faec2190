#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgame/game_model.hpp"
#include "dgame/nash_solver.hpp"
#include "dgame/semidiscretization.hpp"
#include "dgame/value_grid.hpp"

namespace dgame {

// Raised when a certification step is asked to run on an unusable input,
// e.g. an unconverged Nash solution.
class CertificationRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConsistencyGap {
  std::vector<double> discrete;    // W_{i,h}(x0)
  std::vector<double> continuous;  // W_i(x0)
  std::vector<double> gap;         // |W_{i,h} - W_i|
  std::vector<double> budget;      // combined evaluator error bound
};

// dt <= 0 selects h / 20.
ConsistencyGap consistency_gap(const GameDefinition& game, std::span<const StrategyField> strategies,
                               std::span<const double> x0, const TimeStep& ts, double tol,
                               double dt = 0.0);

struct GapRow {
  double h = 0.0;
  int player = 0;
  Vec x0;
  double gap = 0.0;
  double budget = 0.0;
  bool excluded = false;  // below the evaluator noise floor
};

struct RateStudy {
  std::vector<GapRow> table;
  double slope = 0.0;
  double constant = 0.0;  // exp(intercept): gap ~ constant * h^slope
  std::size_t points_used = 0;
  bool degenerate = false;  // every gap under the noise floor: exact scheme
  bool guaranteed_regime = false;
  std::string label;
  HypothesisData constants;
  RateMargins margins;
  std::vector<std::string> warnings;
};

struct RateStudyOptions {
  double tol = 1e-9;  // per evaluator
  double dt = 0.0;    // <= 0 selects min(h) / 20
};

// Consistency gaps for fixed strategies over h_list (strictly decreasing,
// >= 3 entries, all < 1/rho) and a least-squares fit of log gap on log h,
// pooled over players and initial states.
RateStudy rate_study(const GameDefinition& game, std::span<const StrategyField> strategies,
                     std::span<const Vec> x0_samples, std::span<const double> h_list,
                     const RateStudyOptions& opts = {});

// CSV: h,player,x0...,gap,budget
void write_gap_table_csv(std::ostream& out, const RateStudy& study);
// Plot data: log_h,log_gap,player,x0... for the points used in the fit.
void write_rate_plot_csv(std::ostream& out, const RateStudy& study);

struct Deviation {
  std::string id;
  StrategyField strategy;
  double lipschitz = 0.0;  // strategy_lipschitz of the member
};

struct NamedStrategy {
  std::string id;
  StrategyField strategy;
};

// Deterministic deviation family for one player, in order: the equilibrium
// itself, constant strategies on a 5-level lattice of U_i, the equilibrium
// scaled about the box midpoint by 0.5, 0.9, 1.1, 1.5, then smooth random
// perturbations, truncated to `count` members. `extra` members are appended
// after truncation. Members above ls_cap are dropped (scaled) or regenerated
// with smaller amplitude (random); an equilibrium above the cap is an error.
std::vector<Deviation> deviation_family(const GameDefinition& game, int player,
                                        const StrategyField& equilibrium, double ls_cap, int count,
                                        std::uint64_t seed,
                                        std::span<const NamedStrategy> extra = {});

struct EpsilonConfig {
  int family_size = 16;
  std::uint64_t seed = 0;
  double ls_cap = 5.0;
  double tol = 1e-8;
  double dt = 0.0;                 // <= 0 selects h / 20
  double max_residual = 1e-3;      // refuse solutions with a larger Bellman residual
  std::vector<std::vector<NamedStrategy>> extra;  // per player, optional
};

struct EpsilonRow {
  int player = 0;
  std::string deviation;
  std::size_t x0_index = 0;
  Vec x0;
  double delta = 0.0;   // W_i(psi_i, phi_-i) - W_i(phi_i, phi_-i)
  double budget = 0.0;  // combined evaluator bound of the two payoffs
};

struct EpsilonReport {
  std::vector<double> epsilon;  // per player
  double global = 0.0;
  std::vector<std::string> witness_deviation;  // per player
  std::vector<Vec> witness_x0;                 // per player
  std::vector<std::vector<std::string>> family;  // member ids per player
  std::vector<EpsilonRow> rows;
};

// Largest continuous-time payoff improvement any family member achieves
// against the discrete equilibrium, per player. Improvements within the
// evaluator budget count as zero.
EpsilonReport epsilon_nash_check(const GameDefinition& game, const NashSolution& sol,
                                 std::span<const Vec> x0_samples, const EpsilonConfig& cfg);

// CSV: player,deviation,x0...,delta
void write_epsilon_csv(std::ostream& out, const EpsilonReport& report);

// Defect |rho V_i(x) - max_u {f_i + grad V_i . g}| of the discrete solution
// in the continuous HJB system, with central differences over one local grid
// cell. State dimension 1 or 2 only.
std::vector<double> hjb_residual_lq(const GameDefinition& game, const NashSolution& sol,
                                    std::span<const Vec> sample_points, const SolverConfig& cfg);

}  // namespace dgame
