#pragma once

// Run configuration: a `key = value` file overridden by command-line flags.
// Unknown keys are errors (with their line number), numbers are validated
// against the module preconditions before any computation starts.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "polaron/evolve.hpp"
#include "polaron/lattice.hpp"

namespace polaron {

struct Config {
  double kF = 1.0;
  double lambda = 1.0;
  double beta = 0.0;
  std::optional<int> M;          // absent: round-to-even N^{16/45}
  double delta = 2.0 / 15.0;
  std::optional<double> corridor;  // absent: support radius of V
  std::string potential_path;      // empty: V = 1 on 0 < |k| <= 1
  std::string impurity = "static";
  double q_cut = 2.0;
  std::optional<double> p_cut;
  std::string sector = "full";
  int n_max = 12;
  std::string grid = "0:1:21";
  std::uint64_t seed = 42;
  std::string out = "out.csv";

  Potential potential() const {
    return potential_path.empty() ? Potential::ball(1.0, 1.0)
                                  : Potential::load(potential_path);
  }

  std::vector<double> grid_points() const { return parse_grid(grid); }

  static std::vector<double> parse_grid(const std::string& spec) {
    double a = 0, b = 0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(spec);
    if (!(ss >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
      throw std::runtime_error("bad grid spec '" + spec + "', want a:b:n");
    std::vector<double> g;
    if (n == 1) return {a};
    for (int i = 0; i < n; ++i) g.push_back(a + (b - a) * i / (n - 1));
    return g;
  }

  DeskConfig desk() const {
    DeskConfig d;
    d.kF = kF;
    d.lambda = lambda;
    d.beta = beta;
    d.M = M.value_or(0);
    d.delta = delta;
    d.V = potential();
    d.corridor = corridor.value_or(d.V.support_radius());
    d.p_cut = p_cut.value_or(0);
    d.seed = seed;
    return d;
  }

  void validate() const {
    if (kF < 0) throw std::runtime_error("config: kF must be >= 0");
    if (lambda < 0) throw std::runtime_error("config: lambda must be >= 0");
    if (beta < 0) throw std::runtime_error("config: beta must be >= 0");
    if (M && *M != 1 && (*M < 2 || *M % 2 != 0))
      throw std::runtime_error("config: M must be even (or 1 for diagnostics)");
    if (delta < 0 || delta >= 1.0 / 6.0 + 1e-12)
      throw std::runtime_error("config: delta must lie in [0, 1/6)");
    if (corridor && *corridor < 0) throw std::runtime_error("config: corridor must be >= 0");
    if (p_cut && *p_cut < kF) throw std::runtime_error("config: p_cut must be >= kF");
    if (impurity != "static" && impurity != "truncated")
      throw std::runtime_error("config: impurity must be static|truncated");
    if (n_max < 1) throw std::runtime_error("config: n_max must be >= 1");
    parse_grid(grid);
  }
};

inline void apply_config_line(Config& c, const std::string& key, const std::string& value,
                              int lineno) {
  auto bad = [&](const std::string& what) {
    throw std::runtime_error("config line " + std::to_string(lineno) + ": " + what);
  };
  auto to_double = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) bad("malformed number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      bad("malformed number '" + s + "'");
      return 0.0;
    }
  };
  if (key == "kF") c.kF = to_double(value);
  else if (key == "lambda") c.lambda = to_double(value);
  else if (key == "beta") c.beta = to_double(value);
  else if (key == "M") c.M = static_cast<int>(to_double(value));
  else if (key == "delta") c.delta = to_double(value);
  else if (key == "corridor") c.corridor = to_double(value);
  else if (key == "potential") c.potential_path = value;
  else if (key == "impurity") c.impurity = value;
  else if (key == "q_cut") c.q_cut = to_double(value);
  else if (key == "p_cut") c.p_cut = to_double(value);
  else if (key == "sector") c.sector = value;
  else if (key == "n_max") c.n_max = static_cast<int>(to_double(value));
  else if (key == "grid") c.grid = value;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_double(value));
  else if (key == "out") c.out = value;
  else bad("unknown key '" + key + "'");
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    apply_config_line(c, key, value, lineno);
  }
  return c;
}

}  // namespace polaron
