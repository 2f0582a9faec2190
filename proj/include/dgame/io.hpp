#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dgame/certifier.hpp"
#include "dgame/nash_solver.hpp"
#include "dgame/run_config.hpp"

namespace dgame {

// Solution directory layout:
//   manifest.yaml             game, grid, time step, solver settings, diagnostics
//   value_player<i>.csv       x1..xn,value
//   strategy_player<i>.csv    x1..xn,u1..um
// Numbers are written in shortest round-trip form, so loading reproduces the
// solution exactly.
struct SolutionManifest {
  std::string game;
  GameParams params;
  std::vector<AxisSpec> grid;
  double rho = 0.0;
  double h = 0.0;
  SolverConfig solver;
  SolveDiagnostics diagnostics;
  std::string created;  // UTC timestamp; the only non-reproducible field
};

void save_solution(const std::filesystem::path& dir, const RunConfig& cfg,
                   const GameDefinition& game, const NashSolution& sol);

struct LoadedSolution {
  SolutionManifest manifest;
  NashSolution solution;
};

// Reads a solution directory. The game supplies the control boxes and is
// checked against the manifest (name and parameters); throws InvalidInput on
// any mismatch or malformed file.
LoadedSolution load_solution(const std::filesystem::path& dir, const GameDefinition& game);

// Throws InvalidInput unless the manifest was produced from the same game,
// parameters and grid as cfg.
void check_matches(const SolutionManifest& manifest, const RunConfig& cfg);

// Writes a text file, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

std::string utc_timestamp();

}  // namespace dgame
