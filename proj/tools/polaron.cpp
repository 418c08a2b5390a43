// Command-line driver. Subcommands:
//   patches   per-(k,alpha) pair statistics against the asymptotic law
//   eta       coherent excitation curve (exact, closed form, bounds)
//   floor     lower-bound machinery b, h, theta, d and the floor
//   simulate  thm1 | thm2 | thm2_oracle | cor | moments runs
//   verify    lemma/proposition property suites
//
// Every run writes CSV with a '#' metadata header plus a .meta sidecar
// carrying all parameters and a content hash of the inputs, so identical
// config + seed reproduce byte-identical outputs.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "polaron/config.hpp"
#include "polaron/csv.hpp"
#include "polaron/verify.hpp"

using namespace polaron;

namespace {

std::string config_fingerprint(const Config& c) {
  std::ostringstream os;
  os << c.kF << "|" << c.lambda << "|" << c.beta << "|" << (c.M ? *c.M : -1) << "|"
     << c.delta << "|" << (c.corridor ? *c.corridor : -1.0) << "|" << c.potential_path << "|"
     << c.impurity << "|" << c.q_cut << "|" << (c.p_cut ? *c.p_cut : -1.0) << "|" << c.sector
     << "|" << c.n_max << "|" << c.grid << "|" << c.seed;
  std::string blob = os.str();
  if (!c.potential_path.empty()) {
    std::ifstream in(c.potential_path, std::ios::binary);
    std::ostringstream file;
    file << in.rdbuf();
    blob += file.str();
  }
  std::ostringstream hex;
  hex << std::hex << fnv1a(blob);
  return hex.str();
}

void write_sidecar(const Config& c, const std::string& out) {
  std::ofstream meta(out + ".meta");
  meta << "kF = " << format_double(c.kF) << "\n"
       << "lambda = " << format_double(c.lambda) << "\n"
       << "beta = " << format_double(c.beta) << "\n"
       << "M = " << (c.M ? std::to_string(*c.M) : std::string("auto")) << "\n"
       << "delta = " << format_double(c.delta) << "\n"
       << "corridor = " << (c.corridor ? format_double(*c.corridor) : std::string("auto"))
       << "\n"
       << "potential = " << (c.potential_path.empty() ? "builtin-unit-ball" : c.potential_path)
       << "\n"
       << "impurity = " << c.impurity << "\n"
       << "q_cut = " << format_double(c.q_cut) << "\n"
       << "p_cut = " << (c.p_cut ? format_double(*c.p_cut) : std::string("auto")) << "\n"
       << "sector = " << c.sector << "\n"
       << "n_max = " << c.n_max << "\n"
       << "grid = " << c.grid << "\n"
       << "seed = " << c.seed << "\n"
       << "input_hash = " << config_fingerprint(c) << "\n";
}

int run_patches(const Config& cfg) {
  const DeskSetup d = make_desk(cfg.desk());
  CsvWriter csv(cfg.out);
  csv.metadata("kF", d.cfg.kF);
  csv.metadata("M", static_cast<long long>(d.M()));
  csv.metadata("delta", d.cfg.delta);
  csv.metadata("corridor", d.cfg.corridor);
  csv.metadata("N", static_cast<long long>(d.ball.N));
  csv.metadata("threshold", d.ps.threshold);
  csv.metadata("collars", static_cast<long long>(
                   d.M() == 1 ? 0 : std::lround(std::ceil(std::sqrt(double(d.M())) / 2.0))));
  csv.metadata("patch_count_in_window", d.ps.patch_count_in_window() ? "yes" : "no");
  csv.metadata("dropped_zero_weight_alphas",
               static_cast<long long>(d.params.weights.dropped_zero_count));
  csv.metadata("input_hash", config_fingerprint(cfg));
  if (!d.ps.patch_count_in_window())
    std::cerr << "warning: M outside N^{2 delta} << M << N^{2/3 - 2 delta}\n";
  csv.header({"kF", "M", "delta", "k", "alpha", "hemisphere", "m_sq", "n_asym_sq", "ratio"});
  for (std::size_t gi = 0; gi < d.params.weights.gamma.size(); ++gi) {
    const Momentum k = d.params.weights.gamma[gi];
    for (const auto& e : d.params.weights.entries[gi]) {
      const double asym = n_alpha_asymptotic(d.ps, e.alpha, k);
      const double asym_sq = asym * asym;
      csv.row({format_double(d.cfg.kF), std::to_string(d.M()), format_double(d.cfg.delta),
               to_string(k), std::to_string(e.alpha), e.north ? "north" : "south",
               std::to_string(e.count_sq), format_double(asym_sq),
               format_double(asym_sq > 0 ? static_cast<double>(e.count_sq) / asym_sq : 0.0)});
    }
  }
  csv.close();
  write_sidecar(cfg, cfg.out);
  return 0;
}

int run_eta(const Config& cfg) {
  DeskConfig dc = cfg.desk();
  dc.corridor = cfg.corridor.value_or(0.0);  // curve defaults to corridor-free patches
  const DeskSetup d = make_desk(dc);
  emit_curve(d.params, cfg.grid_points(), cfg.out);
  write_sidecar(cfg, cfg.out);
  return 0;
}

int run_floor(const Config& cfg) {
  const FermiBall ball = build_fermi_ball(cfg.kF);
  const Potential V = cfg.potential();
  const int M = cfg.M.value_or(patch_count_rule(static_cast<double>(ball.N)));
  FloorParams fp{cfg.lambda, cfg.kF,  cfg.beta,  static_cast<double>(M),
                 static_cast<double>(ball.N), cfg.delta, V, ThetaMode::ClosedForm, nullptr};
  CsvWriter csv(cfg.out);
  csv.metadata("kF", cfg.kF);
  csv.metadata("lambda", cfg.lambda);
  csv.metadata("beta", cfg.beta);
  csv.metadata("M", static_cast<long long>(M));
  csv.metadata("note", "scale, constants suppressed");
  csv.metadata("input_hash", config_fingerprint(cfg));
  csv.header({"t", "b", "h", "floor", "d", "theta"});
  for (double t : cfg.grid_points()) {
    const FloorResult f = corollary_floor(fp, t);
    csv.row({t, b_of(fp, t), h_of(fp, t), f.floor, f.d, f.theta});
  }
  csv.close();
  write_sidecar(cfg, cfg.out);
  return 0;
}

int run_simulate(const Config& cfg, const std::string& mode) {
  DeskConfig dc = cfg.desk();
  dc.corridor = cfg.corridor.value_or(0.0);
  const DeskSetup d = make_desk(dc);
  const auto grid = cfg.grid_points();
  EvolutionReport rep;
  if (mode == "thm1") {
    rep = thm1_residual(d, grid);
  } else if (mode == "thm2") {
    rep = thm2_residual(d, grid, Thm2Model::Fermionic);
  } else if (mode == "thm2_oracle") {
    rep = thm2_residual(d, grid, Thm2Model::BosonicOracle, cfg.n_max);
  } else if (mode == "cor") {
    rep = cor_gap(d, grid);
  } else if (mode == "moments") {
    FockSpace space(d.modes, Sector::full());
    rep = moment_growth(d, space, 1, grid, MomentFlow::Heff);
  } else {
    std::cerr << "unknown simulate mode: " << mode << "\n";
    return 2;
  }
  rep.meta("seed", static_cast<double>(cfg.seed));
  rep.meta("input_hash", config_fingerprint(cfg));
  rep.to_csv(cfg.out);
  write_sidecar(cfg, cfg.out);
  return 0;
}

int run_verify(const Config& cfg, const std::string& suite, bool all, int trials,
               bool timings) {
  std::vector<SuiteReport> reports;
  if (all) {
    reports = run_all(trials, cfg.seed);
  } else {
    if (suite.empty()) {
      std::cerr << "verify: pass --suite NAME or --all\n";
      return 2;
    }
    reports.push_back(run_suite(suite, trials, cfg.seed));
  }
  std::ofstream out(cfg.out);
  for (const auto& r : reports) {
    out << r.line() << "\n";
    std::cout << r.line() << "\n";
    if (timings) std::cerr << r.name << " wall_seconds=" << r.wall_seconds << "\n";
  }
  write_sidecar(cfg, cfg.out);
  return any_hard_violation(reports) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermi-polaron patch-bosonization laboratory"};
  app.require_subcommand(1);

  Config cfg;
  std::string config_path;
  std::string mode = "thm1";
  std::string suite;
  bool all = false;
  bool timings = false;
  int trials = 100;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--kF", cfg.kF);
    sub->add_option("--lambda", cfg.lambda);
    sub->add_option("--beta", cfg.beta);
    sub->add_option("--M", [&cfg](const CLI::results_t& r) {
      cfg.M = std::stoi(r[0]);
      return true;
    }, "number of patches (default: even-rounded N^{16/45})");
    sub->add_option("--delta", cfg.delta);
    sub->add_option("--corridor", [&cfg](const CLI::results_t& r) {
      cfg.corridor = std::stod(r[0]);
      return true;
    }, "corridor halfwidth in lattice units");
    sub->add_option("--potential", cfg.potential_path, "potential file (kx ky kz value)");
    sub->add_option("--impurity", cfg.impurity, "static|truncated");
    sub->add_option("--q-cut", cfg.q_cut);
    sub->add_option("--p-cut", [&cfg](const CLI::results_t& r) {
      cfg.p_cut = std::stod(r[0]);
      return true;
    }, "mode-set truncation radius");
    sub->add_option("--n-max", cfg.n_max, "bosonic oracle occupation cutoff");
    sub->add_option("--grid", cfg.grid, "time grid a:b:n");
    sub->add_option("--seed", cfg.seed);
    sub->add_option("--out", cfg.out, "output CSV path");
  };

  CLI::App* patches = app.add_subcommand("patches", "pair-count statistics");
  add_common(patches);
  CLI::App* eta = app.add_subcommand("eta", "coherent excitation curve");
  std::string eta_mode = "curve";
  eta->add_option("mode", eta_mode)->check(CLI::IsMember({"curve"}));
  add_common(eta);
  CLI::App* floor_cmd = app.add_subcommand("floor", "lower-bound machinery");
  add_common(floor_cmd);
  floor_cmd->add_option("--t", cfg.grid, "time grid a:b:n (alias of --grid)");
  CLI::App* simulate = app.add_subcommand("simulate", "time-evolution diagnostics");
  add_common(simulate);
  simulate->add_option("--mode", mode, "thm1|thm2|thm2_oracle|cor|moments");
  CLI::App* verify = app.add_subcommand("verify", "lemma property suites");
  add_common(verify);
  verify->add_option("--suite", suite, "suite name");
  verify->add_flag("--all", all, "run every suite");
  verify->add_option("--trials", trials, "random states per suite");
  verify->add_flag("--timings", timings, "print wall times to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (const char* workers = std::getenv("POLARON_WORKERS"))
    if (std::atoi(workers) > 1)
      std::cerr << "note: computation is single-threaded and deterministic; "
                   "POLARON_WORKERS=" << workers << " caps nothing\n";

  try {
    if (!config_path.empty()) {
      Config file_cfg = parse_config_file(config_path);
      // flags already parsed into cfg override the file values
      Config merged = file_cfg;
      CLI::App* active = app.get_subcommands().front();
      auto overridden = [&](const std::string& name) {
        const CLI::Option* o = active->get_option_no_throw(name);
        return o && o->count() > 0;
      };
      if (overridden("--kF")) merged.kF = cfg.kF;
      if (overridden("--lambda")) merged.lambda = cfg.lambda;
      if (overridden("--beta")) merged.beta = cfg.beta;
      if (overridden("--M")) merged.M = cfg.M;
      if (overridden("--delta")) merged.delta = cfg.delta;
      if (overridden("--corridor")) merged.corridor = cfg.corridor;
      if (overridden("--potential")) merged.potential_path = cfg.potential_path;
      if (overridden("--impurity")) merged.impurity = cfg.impurity;
      if (overridden("--q-cut")) merged.q_cut = cfg.q_cut;
      if (overridden("--p-cut")) merged.p_cut = cfg.p_cut;
      if (overridden("--n-max")) merged.n_max = cfg.n_max;
      if (overridden("--grid")) merged.grid = cfg.grid;
      if (overridden("--seed")) merged.seed = cfg.seed;
      if (overridden("--out")) merged.out = cfg.out;
      cfg = merged;
    }
    cfg.validate();

    if (patches->parsed()) return run_patches(cfg);
    if (eta->parsed()) return run_eta(cfg);
    if (floor_cmd->parsed()) return run_floor(cfg);
    if (simulate->parsed()) return run_simulate(cfg, mode);
    if (verify->parsed()) return run_verify(cfg, suite, all, trials, timings);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
