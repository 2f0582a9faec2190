#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgame/errors.hpp"
#include "dgame/games.hpp"
#include "dgame/nash_solver.hpp"

namespace dgame {

// Config error carrying the offending field and, when known, its line.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& source, int line, const std::string& field,
              const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }  // 1-based, 0 when unknown

 private:
  std::string field_;
  int line_;
};

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  int nodes = 0;

  friend bool operator==(const AxisSpec&, const AxisSpec&) = default;
};

struct CertifyConfig {
  std::vector<Vec> x0;
  int family_size = 16;
  std::uint64_t seed = 0;
  double ls_cap = 5.0;
  double tol = 1e-8;
  double dt = 0.0;  // <= 0: h / 20
  double max_residual = 1e-3;
  double max_gap = 1e-2;
  double max_epsilon = 5e-2;
  bool include_riccati = true;  // add the closed-form strategy to the family of LQ games
};

struct RatesConfig {
  std::vector<Vec> x0;  // empty: certify.x0
  double tol = 1e-9;
  double dt = 0.0;  // <= 0: min(h_list) / 20
};

struct SimulateConfig {
  Vec x0;
  double horizon = 5.0;
  int substeps = 20;
};

// Everything one run needs, read from a single YAML file:
//
//   game: lq_symmetric
//   params: {n_players: 2, rho: 1}
//   grid: [{min: -2, max: 2, nodes: 401}]   # omitted min/max default to the state box
//   time: {h: 0.01, h_list: [0.1, 0.05, 0.025, 0.0125]}
//   solver: {control_samples: 201, inner_tol: 1e-6, outer_tol: 1e-6,
//            max_inner: 100000, max_outer: 100, damping: 1}
//   certify: {x0: [-1, -0.5, 0.5, 1], family_size: 16, seed: 7, ...}
//   rates: {tol: 1e-9}
//   simulate: {x0: [1], horizon: 5, substeps: 20}
//   output: out/lq
struct RunConfig {
  std::string source;  // file name used in messages
  std::string game;
  GameParams params;
  std::vector<AxisSpec> grid;
  std::optional<double> h;
  std::vector<double> h_list;
  SolverConfig solver;
  CertifyConfig certify;
  RatesConfig rates;
  SimulateConfig simulate;
  std::string output = "out";
  int sample_count = 4096;  // constant estimation when the game has no analytic ones
  std::uint64_t seed = 0;
};

// Parses and validates; throws ConfigError naming the field and line.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

GameDefinition build_game(const RunConfig& cfg);
Grid build_grid(const RunConfig& cfg, const GameDefinition& game);

// cfg.h, or a ConfigError if the command needs one and it is missing.
double require_h(const RunConfig& cfg);

}  // namespace dgame
