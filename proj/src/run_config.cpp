#include "dgame/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dgame {

ConfigError::ConfigError(const std::string& source, int line, const std::string& field,
                         const std::string& message)
    : InvalidInput(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                   field + ": " + message),
      field_(field),
      line_(line) {}

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& message) const {
    const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    throw ConfigError(source_, line, field, message);
  }

  void require_map(const YAML::Node& node, const std::string& field) const {
    if (!node.IsMap()) fail(node, field, "expected a mapping");
  }

  void only_keys(const YAML::Node& node, const std::string& field,
                 const std::set<std::string>& allowed) const {
    require_map(node, field);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key))
        fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  long long integer(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected an integer");
    try {
      return node.as<long long>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected an integer, got '" + node.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected true or false, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a string");
    return node.Scalar();
  }

  // A state vector: a scalar (1-D) or a sequence of numbers.
  Vec vector(const YAML::Node& node, const std::string& field) const {
    if (node.IsScalar()) return {number(node, field)};
    if (!node.IsSequence()) fail(node, field, "expected a number or a list of numbers");
    Vec out;
    for (std::size_t k = 0; k < node.size(); ++k)
      out.push_back(number(node[k], field + "[" + std::to_string(k) + "]"));
    return out;
  }

  std::vector<Vec> vectors(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of states");
    std::vector<Vec> out;
    for (std::size_t k = 0; k < node.size(); ++k)
      out.push_back(vector(node[k], field + "[" + std::to_string(k) + "]"));
    return out;
  }

 private:
  std::string source_;
};

template <typename T, typename Fn>
void optional_field(const YAML::Node& section, const char* key, T& target, Fn read) {
  if (const YAML::Node n = section[key]) target = read(n);
}

void check_states(const Reader& r, const YAML::Node& node, const std::string& field,
                  const std::vector<Vec>& states, const GameDefinition& game) {
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != static_cast<std::size_t>(game.state_dim))
      r.fail(node, field, "state " + std::to_string(k) + " has dimension " +
                              std::to_string(states[k].size()) + ", game has " +
                              std::to_string(game.state_dim));
    if (!game.state_domain.contains(states[k]))
      r.fail(node, field, "state " + std::to_string(k) + " lies outside the state box");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, "<syntax>", e.msg);
  }
  r.only_keys(root, "",
              {"game", "params", "grid", "time", "solver", "certify", "rates", "simulate", "output",
               "sample_count", "seed"});

  RunConfig cfg;
  cfg.source = source;
  if (!root["game"]) r.fail(root, "game", "missing");
  cfg.game = r.text(root["game"], "game");
  if (const YAML::Node p = root["params"]) {
    r.require_map(p, "params");
    for (const auto& kv : p) {
      const auto key = kv.first.as<std::string>();
      cfg.params[key] = r.number(kv.second, "params." + key);
    }
  }

  GameDefinition game;
  try {
    game = make_game(cfg.game, cfg.params);
  } catch (const InvalidInput& e) {
    r.fail(root["params"] ? root["params"] : root["game"], "params", e.what());
  }
  const double rho = game.discount_rate;

  if (const YAML::Node g = root["grid"]) {
    if (!g.IsSequence()) r.fail(g, "grid", "expected one {min, max, nodes} entry per state dimension");
    if (g.size() != static_cast<std::size_t>(game.state_dim))
      r.fail(g, "grid", "needs " + std::to_string(game.state_dim) + " axes, got " +
                            std::to_string(g.size()));
    for (std::size_t d = 0; d < g.size(); ++d) {
      const std::string f = "grid[" + std::to_string(d) + "]";
      r.only_keys(g[d], f, {"min", "max", "nodes"});
      AxisSpec a{game.state_domain.lower[d], game.state_domain.upper[d], 0};
      optional_field(g[d], "min", a.min, [&](auto& n) { return r.number(n, f + ".min"); });
      optional_field(g[d], "max", a.max, [&](auto& n) { return r.number(n, f + ".max"); });
      if (!g[d]["nodes"]) r.fail(g[d], f + ".nodes", "missing");
      const long long nodes = r.integer(g[d]["nodes"], f + ".nodes");
      if (nodes < 2 || nodes > 100000000) r.fail(g[d]["nodes"], f + ".nodes", "must be >= 2");
      a.nodes = static_cast<int>(nodes);
      if (a.min != game.state_domain.lower[d] || a.max != game.state_domain.upper[d])
        r.fail(g[d], f, "must span the state box [" + std::to_string(game.state_domain.lower[d]) +
                            ", " + std::to_string(game.state_domain.upper[d]) + "]");
      cfg.grid.push_back(a);
    }
  }

  auto check_h = [&](const YAML::Node& n, const std::string& f, double h) {
    if (!(h > 0.0)) r.fail(n, f, "must be positive");
    if (!(rho * h < 1.0))
      r.fail(n, f, "must be below 1/rho = " + std::to_string(1.0 / rho));
  };
  if (const YAML::Node t = root["time"]) {
    r.only_keys(t, "time", {"h", "h_list"});
    if (t["h"]) {
      cfg.h = r.number(t["h"], "time.h");
      check_h(t["h"], "time.h", *cfg.h);
    }
    if (const YAML::Node hl = t["h_list"]) {
      if (!hl.IsSequence()) r.fail(hl, "time.h_list", "expected a list");
      for (std::size_t k = 0; k < hl.size(); ++k) {
        const std::string f = "time.h_list[" + std::to_string(k) + "]";
        const double h = r.number(hl[k], f);
        check_h(hl[k], f, h);
        if (!cfg.h_list.empty() && !(h < cfg.h_list.back()))
          r.fail(hl[k], f, "h_list must be strictly decreasing");
        cfg.h_list.push_back(h);
      }
      if (cfg.h_list.size() < 3) r.fail(hl, "time.h_list", "needs at least 3 entries");
    }
  }

  if (const YAML::Node s = root["solver"]) {
    r.only_keys(s, "solver",
                {"control_samples", "inner_tol", "outer_tol", "max_inner", "max_outer", "damping"});
    auto& sc = cfg.solver;
    if (const YAML::Node cs = s["control_samples"]) {
      sc.control_samples.clear();
      if (cs.IsSequence()) {
        for (std::size_t k = 0; k < cs.size(); ++k)
          sc.control_samples.push_back(static_cast<int>(
              r.integer(cs[k], "solver.control_samples[" + std::to_string(k) + "]")));
      } else {
        sc.control_samples.push_back(static_cast<int>(r.integer(cs, "solver.control_samples")));
      }
    }
    optional_field(s, "inner_tol", sc.inner_tol, [&](auto& n) { return r.number(n, "solver.inner_tol"); });
    optional_field(s, "outer_tol", sc.outer_tol, [&](auto& n) { return r.number(n, "solver.outer_tol"); });
    optional_field(s, "max_inner", sc.max_inner,
                   [&](auto& n) { return static_cast<int>(r.integer(n, "solver.max_inner")); });
    optional_field(s, "max_outer", sc.max_outer,
                   [&](auto& n) { return static_cast<int>(r.integer(n, "solver.max_outer")); });
    optional_field(s, "damping", sc.damping, [&](auto& n) { return r.number(n, "solver.damping"); });
    try {
      validate(sc, game.n_players);
    } catch (const InvalidInput& e) {
      r.fail(s, "solver", e.what());
    }
  }

  if (const YAML::Node c = root["certify"]) {
    r.only_keys(c, "certify",
                {"x0", "family_size", "seed", "ls_cap", "tol", "dt", "max_residual", "max_gap",
                 "max_epsilon", "include_riccati"});
    auto& cc = cfg.certify;
    if (c["x0"]) {
      cc.x0 = r.vectors(c["x0"], "certify.x0");
      check_states(r, c["x0"], "certify.x0", cc.x0, game);
    }
    optional_field(c, "family_size", cc.family_size,
                   [&](auto& n) { return static_cast<int>(r.integer(n, "certify.family_size")); });
    optional_field(c, "seed", cc.seed, [&](auto& n) {
      return static_cast<std::uint64_t>(r.integer(n, "certify.seed"));
    });
    optional_field(c, "ls_cap", cc.ls_cap, [&](auto& n) { return r.number(n, "certify.ls_cap"); });
    optional_field(c, "tol", cc.tol, [&](auto& n) { return r.number(n, "certify.tol"); });
    optional_field(c, "dt", cc.dt, [&](auto& n) { return r.number(n, "certify.dt"); });
    optional_field(c, "max_residual", cc.max_residual,
                   [&](auto& n) { return r.number(n, "certify.max_residual"); });
    optional_field(c, "max_gap", cc.max_gap, [&](auto& n) { return r.number(n, "certify.max_gap"); });
    optional_field(c, "max_epsilon", cc.max_epsilon,
                   [&](auto& n) { return r.number(n, "certify.max_epsilon"); });
    optional_field(c, "include_riccati", cc.include_riccati,
                   [&](auto& n) { return r.boolean(n, "certify.include_riccati"); });
    if (cc.family_size < 1) r.fail(c["family_size"], "certify.family_size", "must be >= 1");
    if (!(cc.tol > 0.0)) r.fail(c["tol"], "certify.tol", "must be positive");
    if (!(cc.ls_cap > 0.0)) r.fail(c["ls_cap"], "certify.ls_cap", "must be positive");
  }

  if (const YAML::Node rt = root["rates"]) {
    r.only_keys(rt, "rates", {"x0", "tol", "dt"});
    if (rt["x0"]) {
      cfg.rates.x0 = r.vectors(rt["x0"], "rates.x0");
      check_states(r, rt["x0"], "rates.x0", cfg.rates.x0, game);
    }
    optional_field(rt, "tol", cfg.rates.tol, [&](auto& n) { return r.number(n, "rates.tol"); });
    optional_field(rt, "dt", cfg.rates.dt, [&](auto& n) { return r.number(n, "rates.dt"); });
    if (!(cfg.rates.tol > 0.0)) r.fail(rt["tol"], "rates.tol", "must be positive");
  }

  if (const YAML::Node sm = root["simulate"]) {
    r.only_keys(sm, "simulate", {"x0", "horizon", "substeps"});
    if (sm["x0"]) {
      cfg.simulate.x0 = r.vector(sm["x0"], "simulate.x0");
      check_states(r, sm["x0"], "simulate.x0", {cfg.simulate.x0}, game);
    }
    optional_field(sm, "horizon", cfg.simulate.horizon,
                   [&](auto& n) { return r.number(n, "simulate.horizon"); });
    optional_field(sm, "substeps", cfg.simulate.substeps,
                   [&](auto& n) { return static_cast<int>(r.integer(n, "simulate.substeps")); });
    if (!(cfg.simulate.horizon > 0.0)) r.fail(sm["horizon"], "simulate.horizon", "must be positive");
    if (cfg.simulate.substeps < 1) r.fail(sm["substeps"], "simulate.substeps", "must be >= 1");
  }

  if (root["output"]) cfg.output = r.text(root["output"], "output");
  if (root["sample_count"]) {
    cfg.sample_count = static_cast<int>(r.integer(root["sample_count"], "sample_count"));
    if (cfg.sample_count < 1) r.fail(root["sample_count"], "sample_count", "must be >= 1");
  }
  if (root["seed"]) cfg.seed = static_cast<std::uint64_t>(r.integer(root["seed"], "seed"));
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "<file>", "cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path);
}

GameDefinition build_game(const RunConfig& cfg) { return make_game(cfg.game, cfg.params); }

Grid build_grid(const RunConfig& cfg, const GameDefinition& game) {
  if (cfg.grid.empty()) throw ConfigError(cfg.source, 0, "grid", "missing");
  std::vector<int> nodes;
  for (const auto& a : cfg.grid) nodes.push_back(a.nodes);
  return Grid::uniform(game.state_domain, nodes);
}

double require_h(const RunConfig& cfg) {
  if (!cfg.h) throw ConfigError(cfg.source, 0, "time.h", "missing");
  return *cfg.h;
}

}  // namespace dgame
