#include "dgame/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dgame/csv.hpp"
#include "dgame/errors.hpp"

namespace dgame {

namespace fs = std::filesystem;

namespace {

std::string value_file(int player) { return "value_player" + std::to_string(player) + ".csv"; }
std::string strategy_file(int player) { return "strategy_player" + std::to_string(player) + ".csv"; }

template <typename T>
void emit_numbers(YAML::Emitter& y, const std::vector<T>& values) {
  y << YAML::Flow << YAML::BeginSeq;
  for (const auto& v : values) {
    if constexpr (std::is_floating_point_v<T>)
      y << format_number(v);
    else
      y << v;
  }
  y << YAML::EndSeq;
}

double read_number(const YAML::Node& n, const std::string& field) {
  if (!n || !n.IsScalar()) throw InvalidInput("manifest: missing or malformed '" + field + "'");
  try {
    return parse_number(n.Scalar());
  } catch (const InvalidInput&) {
    throw InvalidInput("manifest: '" + field + "' is not a number");
  }
}

std::vector<double> read_numbers(const YAML::Node& n, const std::string& field) {
  if (!n || !n.IsSequence()) throw InvalidInput("manifest: missing or malformed '" + field + "'");
  std::vector<double> out;
  for (const auto& v : n) out.push_back(read_number(v, field));
  return out;
}

void write_grid_csv(const fs::path& path, const Grid& grid, std::span<const double> data,
                    std::size_t width, const std::vector<std::string>& value_names) {
  std::ostringstream out;
  std::vector<std::string> header;
  for (std::size_t d = 0; d < grid.dim(); ++d) header.push_back("x" + std::to_string(d + 1));
  header.insert(header.end(), value_names.begin(), value_names.end());
  CsvWriter csv(out, header);
  Vec x(grid.dim());
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    grid.node(k, x);
    csv.row(x);
    csv.row(data.subspan(k * width, width));
    csv.end_row();
  }
  write_text(path, out.str());
}

// Reads a node-indexed CSV and checks its coordinates against the grid.
Vec read_grid_csv(const fs::path& path, const Grid& grid, std::size_t width) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  const CsvTable table = read_csv(in);
  const std::size_t n = grid.dim();
  if (table.header.size() != n + width)
    throw InvalidInput(path.string() + ": expected " + std::to_string(n + width) + " columns");
  if (table.rows.size() != grid.node_count())
    throw InvalidInput(path.string() + ": expected " + std::to_string(grid.node_count()) +
                       " rows, found " + std::to_string(table.rows.size()));
  Vec data(grid.node_count() * width);
  Vec x(n);
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    if (row.size() != n + width)
      throw InvalidInput(path.string() + ": row " + std::to_string(k + 2) + " has wrong width");
    grid.node(k, x);
    for (std::size_t d = 0; d < n; ++d)
      if (parse_number(row[d]) != x[d])
        throw InvalidInput(path.string() + ": row " + std::to_string(k + 2) +
                           " does not match the manifest grid");
    for (std::size_t j = 0; j < width; ++j) data[k * width + j] = parse_number(row[n + j]);
  }
  return data;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidInput("write failed for " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void save_solution(const fs::path& dir, const RunConfig& cfg, const GameDefinition& game,
                   const NashSolution& sol) {
  fs::create_directories(dir);
  const Grid& grid = sol.values.front().grid();
  for (int i = 0; i < game.n_players; ++i) {
    write_grid_csv(dir / value_file(i), grid, sol.values[i].values(), 1, {"value"});
    std::vector<std::string> names;
    for (int k = 0; k < game.control_dims[i]; ++k) names.push_back("u" + std::to_string(k + 1));
    write_grid_csv(dir / strategy_file(i), grid, sol.strategies[i].controls(),
                   static_cast<std::size_t>(game.control_dims[i]), names);
  }

  const auto& d = sol.diagnostics;
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "game" << YAML::Value << game.name;
  y << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : game.params) y << YAML::Key << k << YAML::Value << format_number(v);
  y << YAML::EndMap;
  y << YAML::Key << "grid" << YAML::Value << YAML::BeginSeq;
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    y << YAML::Flow << YAML::BeginMap;
    y << YAML::Key << "min" << YAML::Value << format_number(grid.axis(a).front());
    y << YAML::Key << "max" << YAML::Value << format_number(grid.axis(a).back());
    y << YAML::Key << "nodes" << YAML::Value << grid.axis(a).size();
    y << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "rho" << YAML::Value << format_number(sol.ts.rho);
  y << YAML::Key << "h" << YAML::Value << format_number(sol.ts.h);
  y << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "control_samples" << YAML::Value;
  emit_numbers(y, cfg.solver.control_samples);
  y << YAML::Key << "inner_tol" << YAML::Value << format_number(cfg.solver.inner_tol);
  y << YAML::Key << "outer_tol" << YAML::Value << format_number(cfg.solver.outer_tol);
  y << YAML::Key << "max_inner" << YAML::Value << cfg.solver.max_inner;
  y << YAML::Key << "max_outer" << YAML::Value << cfg.solver.max_outer;
  y << YAML::Key << "damping" << YAML::Value << format_number(cfg.solver.damping);
  y << YAML::EndMap;
  y << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "converged" << YAML::Value << d.converged;
  y << YAML::Key << "outer_sweeps" << YAML::Value << d.outer_sweeps;
  y << YAML::Key << "strategy_change" << YAML::Value << format_number(d.strategy_change);
  y << YAML::Key << "sweep_changes" << YAML::Value;
  emit_numbers(y, d.sweep_changes);
  y << YAML::Key << "inner_iterations" << YAML::Value;
  emit_numbers(y, d.inner_iterations);
  y << YAML::Key << "inner_residuals" << YAML::Value;
  emit_numbers(y, d.inner_residuals);
  y << YAML::Key << "bellman_residuals" << YAML::Value;
  emit_numbers(y, d.bellman_residuals);
  y << YAML::EndMap;
  y << YAML::Key << "created" << YAML::Value << utc_timestamp();
  y << YAML::EndMap;
  write_text(dir / "manifest.yaml", std::string(y.c_str()) + "\n");
}

LoadedSolution load_solution(const fs::path& dir, const GameDefinition& game) {
  const fs::path mpath = dir / "manifest.yaml";
  if (!fs::exists(mpath)) throw InvalidInput("no manifest.yaml in " + dir.string());
  YAML::Node m;
  try {
    m = YAML::LoadFile(mpath.string());
  } catch (const YAML::Exception& e) {
    throw InvalidInput(mpath.string() + ": " + e.what());
  }
  if (!m.IsMap()) throw InvalidInput(mpath.string() + ": expected a mapping");

  LoadedSolution out;
  SolutionManifest& man = out.manifest;
  if (!m["game"] || !m["game"].IsScalar()) throw InvalidInput("manifest: missing 'game'");
  man.game = m["game"].Scalar();
  if (const YAML::Node p = m["params"]) {
    if (!p.IsMap()) throw InvalidInput("manifest: 'params' must be a mapping");
    for (const auto& kv : p)
      man.params[kv.first.Scalar()] = read_number(kv.second, "params." + kv.first.Scalar());
  }
  if (man.game != game.name || man.params != game.params)
    throw InvalidInput("solution was computed for a different game or parameters");

  const YAML::Node g = m["grid"];
  if (!g || !g.IsSequence() || g.size() != static_cast<std::size_t>(game.state_dim))
    throw InvalidInput("manifest: 'grid' must list one axis per state dimension");
  std::vector<int> nodes;
  for (const auto& a : g) {
    AxisSpec s;
    s.min = read_number(a["min"], "grid.min");
    s.max = read_number(a["max"], "grid.max");
    s.nodes = static_cast<int>(read_number(a["nodes"], "grid.nodes"));
    man.grid.push_back(s);
    nodes.push_back(s.nodes);
  }
  for (std::size_t d = 0; d < man.grid.size(); ++d)
    if (man.grid[d].min != game.state_domain.lower[d] || man.grid[d].max != game.state_domain.upper[d])
      throw InvalidInput("manifest grid does not span the state box");
  const Grid grid = Grid::uniform(game.state_domain, nodes);

  man.rho = read_number(m["rho"], "rho");
  man.h = read_number(m["h"], "h");
  if (man.rho != game.discount_rate) throw InvalidInput("manifest rho differs from the game's");

  if (const YAML::Node s = m["solver"]) {
    man.solver.control_samples.clear();
    for (double v : read_numbers(s["control_samples"], "solver.control_samples"))
      man.solver.control_samples.push_back(static_cast<int>(v));
    man.solver.inner_tol = read_number(s["inner_tol"], "solver.inner_tol");
    man.solver.outer_tol = read_number(s["outer_tol"], "solver.outer_tol");
    man.solver.max_inner = static_cast<int>(read_number(s["max_inner"], "solver.max_inner"));
    man.solver.max_outer = static_cast<int>(read_number(s["max_outer"], "solver.max_outer"));
    man.solver.damping = read_number(s["damping"], "solver.damping");
  }
  if (const YAML::Node dn = m["diagnostics"]) {
    auto& d = man.diagnostics;
    if (!dn["converged"]) throw InvalidInput("manifest: missing 'diagnostics.converged'");
    d.converged = dn["converged"].as<bool>();
    d.outer_sweeps = static_cast<int>(read_number(dn["outer_sweeps"], "diagnostics.outer_sweeps"));
    d.strategy_change = read_number(dn["strategy_change"], "diagnostics.strategy_change");
    d.sweep_changes = read_numbers(dn["sweep_changes"], "diagnostics.sweep_changes");
    for (double v : read_numbers(dn["inner_iterations"], "diagnostics.inner_iterations"))
      d.inner_iterations.push_back(static_cast<int>(v));
    d.inner_residuals = read_numbers(dn["inner_residuals"], "diagnostics.inner_residuals");
    d.bellman_residuals = read_numbers(dn["bellman_residuals"], "diagnostics.bellman_residuals");
  }
  if (m["created"]) man.created = m["created"].Scalar();

  NashSolution& sol = out.solution;
  sol.ts = make_timestep(man.rho, man.h);
  sol.diagnostics = man.diagnostics;
  for (int i = 0; i < game.n_players; ++i) {
    sol.values.emplace_back(grid, read_grid_csv(dir / value_file(i), grid, 1));
    sol.strategies.emplace_back(
        grid, game.control_sets[i],
        read_grid_csv(dir / strategy_file(i), grid, static_cast<std::size_t>(game.control_dims[i])));
  }
  return out;
}

void check_matches(const SolutionManifest& manifest, const RunConfig& cfg) {
  if (manifest.game != cfg.game)
    throw InvalidInput("solution is for game '" + manifest.game + "', config names '" + cfg.game + "'");
  if (manifest.grid != cfg.grid) throw InvalidInput("solution grid differs from the config grid");
  if (cfg.h && *cfg.h != manifest.h)
    throw InvalidInput("solution step h = " + format_number(manifest.h) + " differs from time.h = " +
                       format_number(*cfg.h));
}

}  // namespace dgame
