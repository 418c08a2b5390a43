// Acceptance suite: runs every exit criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria. Invoke with --cli PATH to include the CLI determinism
// criterion (ctest wires the path in).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "polaron/config.hpp"
#include "polaron/verify.hpp"

using namespace polaron;

namespace {

int failures = 0;

struct Criterion {
  std::string label;
  bool ok = true;
  std::ostringstream detail;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  explicit Criterion(std::string l) : label(std::move(l)) {}
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "  [failed] " << what << "\n";
    }
  }
  void note(const std::string& what) { detail << "  " << what << "\n"; }
  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s (%.1fs)\n", ok ? "PASS" : "FAIL", label.c_str(), secs);
    std::fputs(detail.str().c_str(), stdout);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

DeskSetup desk_kf1_19modes() {
  DeskConfig cfg;
  cfg.kF = 1.0;
  cfg.lambda = 1.0;
  cfg.M = 2;
  cfg.corridor = 0.0;
  cfg.p_cut = std::sqrt(2.0);
  cfg.V = Potential::from_pairs({{{0, 0, 1}, 1.0}, {{0, 0, -1}, 1.0}});
  return make_desk(cfg);
}

SpMat identity(std::size_t n) {
  SpMat I(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  I.setIdentity();
  return I;
}

// ---------------------------------------------------------------------------

void criterion_1_exact_identities() {
  Criterion c("1 exact operator identities");
  // dense identity checks on the reduced 9-mode desk
  const FermiBall ball = build_fermi_ball(1.0);
  const PatchSet ps = build_patch_set(2, 1.0, 7.0, 2.0 / 15.0, 0.0);
  const Potential V = Potential::from_pairs({{{0, 0, 1}, 1.0}, {{0, 0, -1}, 1.0}});
  const CoherentParams params = make_coherent_params(1.0, ball, ps, V);
  std::vector<Momentum> modes = ball.modes;
  modes.push_back({0, 0, 2});
  modes.push_back({0, 0, -2});
  FockSpace space(mode_set_from_list(std::move(modes), ball), Sector::full());
  const SpMat I = identity(space.dim());

  double car = 0;
  std::vector<SpMat> ads, as;
  for (const auto& p : space.modes().modes) {
    ads.push_back(a_dagger(space, p).mat);
    as.push_back(a_op(space, p).mat);
  }
  for (std::size_t i = 0; i < ads.size(); ++i)
    for (std::size_t j = 0; j < ads.size(); ++j) {
      SpMat anti = SpMat(SpMat(as[i] * ads[j]) + SpMat(ads[j] * as[i]));
      if (i == j) anti = SpMat(anti - I);
      car = std::max(car, max_abs(anti));
      car = std::max(car, max_abs(SpMat(SpMat(as[i] * as[j]) + SpMat(as[j] * as[i]))));
    }
  c.expect(car <= 1e-10, "CAR identities");
  c.note("max CAR defect " + format_double(car));

  const SpMat R = particle_hole(space, ball).mat;
  c.expect(max_abs(SpMat(SpMat(R * R) - I)) <= 1e-10, "R^2 = 1");
  double conj = 0;
  for (const auto& p : space.modes().modes) {
    const SpMat lhs = SpMat(R * SpMat(a_dagger(space, p).mat * R));
    const SpMat want = ball.contains(p) ? a_op(space, p).mat : a_dagger(space, p).mat;
    conj = std::max(conj, max_abs(SpMat(lhs - want)));
  }
  c.expect(conj <= 1e-10, "particle-hole conjugation identities");

  const SpMat N = number_op(space).mat;
  double shift = 0;
  for (std::size_t gi = 0; gi < params.weights.gamma.size(); ++gi)
    for (const auto& e : params.weights.entries[gi]) {
      const SpMat cc = SpMat(pair_creator(space, e).mat.adjoint());
      shift = std::max(
          max_abs(SpMat(SpMat(cc * N) - SpMat(SpMat(N + 2.0 * I) * cc))), shift);
    }
  c.expect(shift <= 1e-10, "c N = (N+2) c");

  {  // reconstruction
    auto micro = micro_terms(space, ball, V, 1.0, false);
    const SpMat H = make_sparse(space, micro.terms).mat;
    const SpMat H0 = make_sparse(space, h0_terms(space, ball)).mat;
    const SpMat bd = make_sparse(space, b_dagger_terms(space, ball, V, 1.0)).mat;
    const SpMat E = make_sparse(space, nonbosonizable_terms(space, ball, V, 1.0).terms).mat;
    const SpMat lhs = SpMat(R * SpMat(H * R));
    const SpMat rhs =
        SpMat(H0 + bd + SpMat(bd.adjoint()) + E + static_cast<double>(ball.EpW) * I);
    const double defect = max_abs(SpMat(lhs - rhs));
    c.expect(defect <= 1e-10, "R* H R reconstruction");
    c.note("reconstruction defect " + format_double(defect));
  }

  {  // commutator extractions
    const SpMat H0 = make_sparse(space, h0_terms(space, ball)).mat;
    const SpMat DB = make_sparse(space, db_terms(space, params.weights)).mat;
    for (std::size_t gi = 0; gi < params.weights.gamma.size(); ++gi)
      for (const auto& e : params.weights.entries[gi]) {
        const SpMat cd = pair_creator(space, e).mat;
        const auto lin = commutator_residual_lin(space, ball, e);
        const SpMat lin_check = SpMat(SpMat(H0 * cd) - SpMat(cd * H0) - e.eps * cd -
                                      lin.residual_dagger.mat);
        c.expect(max_abs(lin_check) <= 1e-10, "E^lin extraction");
        const auto bos = commutator_residual_bos(space, params.weights, e);
        const SpMat bos_check = SpMat(SpMat(DB * cd) - SpMat(cd * DB) - e.eps * cd -
                                      bos.residual_dagger.mat);
        c.expect(max_abs(bos_check) <= 1e-10, "E^B extraction");
      }
  }

  {  // Krylov machinery on the 50388-dimensional particle-number sector
    const DeskSetup d = desk_kf1_19modes();
    FockSpace sector(d.modes, Sector::fixed_n(static_cast<int>(ball.N)));
    c.expect(sector.dim() == 50388, "sector dimension C(19,7)");
    auto micro = micro_terms(sector, ball, d.cfg.V, 1.0, false);
    FockOperator H(sector, micro.terms);
    Vec psi = Vec::Zero(static_cast<Eigen::Index>(sector.dim()));
    uint64_t mask = 0;
    for (const auto& k : ball.modes) mask |= 1ull << sector.mode_index(k);
    psi[static_cast<Eigen::Index>(sector.index(mask))] = 1.0;
    const Vec a = krylov_expv(H, psi, 0.3);
    c.expect(std::abs(a.norm() - 1.0) <= 1e-10, "Krylov norm preservation");
    const Vec b = krylov_expv(H, krylov_expv(H, psi, 0.1), 0.2);
    c.expect((a - b).norm() <= 1e-8, "Krylov semigroup consistency");
    Vec hp;
    H.apply(psi, hp);
    Vec ha;
    H.apply(a, ha);
    c.expect(std::abs(std::real(psi.dot(hp)) - std::real(a.dot(ha))) <= 1e-8,
             "energy conservation under Krylov");
  }
}

void criterion_2_explicit_bounds() {
  Criterion c("2 explicit-constant bounds");
  for (const std::string name : {"pair_bounds", "ccr_error"}) {
    const SuiteReport rep = run_suite(name, 100, 42);
    c.expect(rep.violations == 0, name + " suite");
    c.note(rep.line());
  }
  {
    const SuiteReport rep = run_suite("eta_bounds2", 20, 42);
    c.expect(rep.violations == 0, "eta_bounds2 suite");
    c.note(rep.line());
  }
  {
    const SuiteReport rep = run_suite("eta_dominance", 50, 42);
    c.expect(rep.violations == 0, "eta dominance over 50 sampled s at kF = 40");
    c.note(rep.line());
  }
}

void criterion_3_bosonic_oracle() {
  Criterion c("3 bosonic-oracle exactness");
  DeskConfig cfg;
  cfg.kF = 1.0;
  cfg.lambda = 1.0;
  cfg.M = 2;
  cfg.corridor = 0.0;
  cfg.V = Potential::from_pairs({{{0, 0, 1}, 1.0}, {{0, 0, -1}, 1.0}});
  const DeskSetup d = make_desk(cfg);
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(i / 19.0);  // lambda kF t in [0,1]
  const EvolutionReport rep = thm2_residual(d, grid, Thm2Model::BosonicOracle, 28);
  const auto& r = rep.column("residual");
  const auto& tail = rep.column("tail_mass");
  double rmax = 0, tmax = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    rmax = std::max(rmax, r[i]);
    tmax = std::max(tmax, tail[i]);
  }
  c.expect(tmax < 1e-10, "tail mass below 1e-10");
  c.expect(rmax <= 1e-6, "coherent residual below 1e-6 on the 20-point grid");
  c.note("max residual " + format_double(rmax) + ", max tail " + format_double(tmax));
}

void criterion_4_number_expectation() {
  Criterion c("4 number-operator expectation identity");
  const SuiteReport rep = run_suite("number_expectation", 6, 42);
  c.expect(rep.violations == 0, "identity to 1e-8 on the fermionic desk and the oracle");
  c.note(rep.line());
}

void criterion_5_eta_curve() {
  Criterion c("5 closed-form eta curve at kF = 40");
  DeskConfig cfg;
  cfg.kF = 40.0;
  cfg.lambda = 1.0;
  cfg.corridor = 0.0;
  cfg.V = Potential::ball(1.0, 1.0);
  const DeskSetup d = make_desk(cfg);
  c.note("M = " + std::to_string(d.M()) +
         ", N = " + std::to_string(static_cast<long long>(d.ball.N)));
  double worst = 0;
  for (double frac : {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0}) {
    const double s = frac / cfg.kF;
    const double ratio = norm_sq_exact(d.params, s) / norm_sq_closed(d.params, s);
    worst = std::max(worst, std::abs(ratio - 1.0));
  }
  c.expect(worst <= 0.10, "relative exact/closed error <= 0.10 on (0, 2/kF]");
  c.note("max |exact/closed - 1| = " + format_double(worst));

  double law = 0;
  for (const auto& k : cfg.V.support()) law += cfg.V(k) * cfg.V(k) * k.norm();
  law *= std::numbers::pi * cfg.kF * cfg.kF;
  const double s0 = 1e-5;
  const double small_s = norm_sq_closed(d.params, s0) / (s0 * s0);
  c.expect(std::abs(small_s / law - 1.0) <= 0.02, "small-s law within 2%");
  c.note("closed/s^2 over law = " + format_double(small_s / law));
}

void criterion_6_patch_asymptotics() {
  Criterion c("6 patch asymptotics trend");
  // Ratio errors averaged over the three support directions. The trend is
  // asserted between the endpoints kF = 15 and kF = 40 per the derived
  // anchor ("ratio error decreases from kF=15 to kF=40"); the kF = 25
  // midpoint carries lattice-shell arithmetic noise comparable to the trend
  // slope and is reported.
  std::vector<double> mean_errs, sum_errs;
  for (double kF : {15.0, 25.0, 40.0}) {
    const FermiBall ball = build_fermi_ball(kF);
    const int M = patch_count_rule(static_cast<double>(ball.N));
    const PatchSet ps =
        build_patch_set(M, kF, static_cast<double>(ball.N), 2.0 / 15.0, 0.0);
    double mean = 0, sum = 0;
    int nk = 0;
    for (const Momentum k : {Momentum{0, 0, 1}, Momentum{0, 1, 0}, Momentum{1, 0, 0}}) {
      const auto is = index_set(ps, k);
      double mean_ratio = 0;
      for (int alpha : is.north) {
        const auto w = pair_count(ball, ps, is, alpha);
        const double asym = n_alpha_asymptotic(ps, alpha, k);
        mean_ratio += static_cast<double>(w.count_sq) / (asym * asym);
      }
      mean += mean_ratio / static_cast<double>(is.north.size());
      const auto s = sum_n_squared(ball, ps, k);
      sum += s.north / s.comparator;
      ++nk;
    }
    mean_errs.push_back(std::abs(mean / nk - 1.0));
    sum_errs.push_back(std::abs(sum / nk - 1.0));
    c.note("kF=" + format_double(kF) + " mean_ratio_err=" + format_double(mean_errs.back()) +
           " sum_ratio_err=" + format_double(sum_errs.back()));
  }
  c.expect(mean_errs[2] < mean_errs[0], "per-patch ratio error decreases 15 -> 40");
  c.expect(sum_errs[2] < sum_errs[0], "summed ratio error decreases 15 -> 40");
  c.expect(mean_errs[2] <= 0.25, "per-patch ratio error <= 0.25 at kF = 40");
  c.expect(sum_errs[2] <= 0.25, "summed ratio error <= 0.25 at kF = 40");
}

void criterion_7_gronwall_moments() {
  Criterion c("7 Gronwall moments");
  std::vector<double> fits;
  {  // desk 1: kF = 1 on the 19-mode full space
    const DeskSetup d = desk_kf1_19modes();
    FockSpace space(d.modes, Sector::full());
    for (int n : {1, 2}) {
      const EvolutionReport rep =
          moment_growth(d, space, n, {0.0, 0.25, 0.5}, MomentFlow::Heff);
      for (const auto& [k, v] : rep.metadata)
        if (k == "fitted_C") fits.push_back(std::stod(v));
    }
  }
  {  // desk 2: kF = sqrt(2) in an excitation-cutoff sector
    DeskConfig cfg;
    cfg.kF = std::sqrt(2.0);
    cfg.M = 2;
    cfg.corridor = 0.0;
    cfg.p_cut = 2.0;
    cfg.V = Potential::from_pairs({{{0, 0, 1}, 1.0}, {{0, 0, -1}, 1.0}});
    const DeskSetup d = make_desk(cfg);
    FockSpace space(d.modes, Sector::excitation_cutoff(4));
    for (int n : {1, 2}) {
      const EvolutionReport rep =
          moment_growth(d, space, n, {0.0, 0.2, 0.4}, MomentFlow::Heff);
      for (const auto& [k, v] : rep.metadata)
        if (k == "fitted_C") fits.push_back(std::stod(v));
    }
  }
  double lo = 1e300, hi = 0;
  for (double f : fits) {
    c.expect(std::isfinite(f) && f >= 0, "finite fitted C");
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  std::ostringstream os;
  os << "fitted C values:";
  for (double f : fits) os << " " << format_double(f);
  os << "  (spread " << format_double(lo > 0 ? hi / lo : 0) << "x, reported)";
  c.note(os.str());
  c.expect(!fits.empty() && hi > 0, "a finite C fits the moment growth");
}

void criterion_8_corollary_machinery() {
  Criterion c("8 corollary machinery");
  const FermiBall b20 = build_fermi_ball(20.0);
  const FermiBall b40 = build_fermi_ball(40.0);
  const Potential V = Potential::ball(1.0, 1.0);
  auto make = [&](const FermiBall& ball) {
    FloorParams p;
    p.lambda = 1.0;
    p.kF = ball.kF;
    p.N = static_cast<double>(ball.N);
    p.M = patch_count_rule(p.N);
    p.delta = 2.0 / 15.0;
    p.V = V;
    return p;
  };
  const FloorParams p20 = make(b20), p40 = make(b40);

  {  // branch continuity of b_dot at t* to 1e-12: evaluate both branch forms
    const double a = 2.0 * p20.kF;  // |k| = 1 representative
    const double tstar = std::numbers::pi / (2.0 * a);
    const double left = 4.0 * (a * tstar) / (std::numbers::pi * std::numbers::pi);
    const double right = 1.0 / (a * tstar);
    c.expect(std::abs(left - right) <= 1e-12, "b_dot branch continuity at t*");
    c.expect(std::abs(b_of(p20, std::nextafter(tstar, 0.0)) -
                      b_of(p20, std::nextafter(tstar, 1.0))) <= 1e-10,
             "b branch continuity");
  }
  {  // ODE residual of the stated solution
    double worst = 0;
    for (double t : {0.011, 0.029, 0.061, 0.093}) {
      const auto r = h_ode_residuals(p20, t);
      worst = std::max(worst, std::abs(r.stated) / std::max(1.0, std::abs(b_dot(p20, t))));
    }
    c.expect(worst <= 1e-8, "residual of dh/dt = db/dt - theta (h+d)");
    c.note("max relative ODE residual " + format_double(worst));
  }
  {  // theta and d match their formulas
    const double h2 = std::pow(p20.lambda, 2) * std::numbers::pi * p20.kF * p20.kF * 6.0;
    c.expect(std::abs(theta_of(p20) - (std::sqrt(h2) + 2.0 * h2 / p20.kF)) <= 1e-9,
             "theta closed form");
    c.expect(std::abs(d_of(p20) - p20.M * std::pow(p20.N, -2.0 / 3.0 + p20.delta)) <= 1e-12,
             "d closed form");
  }
  {  // O(1) stability of the constant-suppressed main term at t = 1/kF
    const double m20 = corollary_floor(p20, 1.0 / p20.kF).main;
    const double m40 = corollary_floor(p40, 1.0 / p40.kF).main;
    c.expect(std::abs(m40 / m20 - 1.0) <= 0.10, "floor main term kF-stable within 10%");
    c.note("main(kF=20) = " + format_double(m20) + ", main(kF=40) = " + format_double(m40));
  }
  {  // desk gap vs floor: reported, not asserted
    DeskConfig cfg;
    cfg.kF = 1.0;
    cfg.lambda = 1.0;
    cfg.M = 2;
    cfg.corridor = 0.0;
    cfg.p_cut = std::sqrt(2.0);
    cfg.V = Potential::from_pairs({{{0, 0, 1}, 1.0}, {{0, 0, -1}, 1.0}});
    const DeskSetup d = make_desk(cfg);
    const EvolutionReport rep = cor_gap(d, {0.0, 0.25, 0.5});
    const auto& gap = rep.column("residual");
    const auto& fl = rep.column("floor");
    std::ostringstream os;
    os << "desk gap vs floor (reported):";
    for (std::size_t i = 0; i < gap.size(); ++i)
      os << " (" << format_double(gap[i]) << " vs " << format_double(fl[i]) << ")";
    c.note(os.str());
  }
}

void criterion_9_residual_reports() {
  Criterion c("9 theorem residual reports");
  const DeskSetup d = desk_kf1_19modes();
  const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

  const EvolutionReport t1 = thm1_residual(d, grid);
  const auto& r1 = t1.column("residual");
  const auto& duh = t1.column("duhamel_bound");
  c.expect(r1[0] <= 1e-10, "thm1 residual zero at t = 0");
  double max_jump = 0, max_g = 0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    max_g = std::max(max_g, (duh[i + 1] - duh[i]) / (grid[i + 1] - grid[i]));
  for (std::size_t i = 0; i < r1.size(); ++i) {
    c.expect(r1[i] <= 2.0 + 1e-12, "thm1 residual bounded by 2");
    c.expect(r1[i] <= duh[i] + 1e-6, "thm1 residual dominated by the Duhamel bound");
    if (i + 1 < r1.size()) max_jump = std::max(max_jump, std::abs(r1[i + 1] - r1[i]));
  }
  c.expect(max_jump <= 2.0 * max_g * 0.1 + 1e-9, "thm1 residual continuity");
  c.note("thm1 final residual " + format_double(r1.back()) + ", duhamel " +
         format_double(duh.back()));

  const EvolutionReport t2 = thm2_residual(d, grid, Thm2Model::Fermionic);
  const auto& r2 = t2.column("residual");
  c.expect(r2[0] <= 1e-10, "thm2 residual zero at t = 0");
  for (std::size_t i = 0; i < r2.size(); ++i) {
    c.expect(r2[i] <= 2.0 + 1e-12, "thm2 residual bounded by 2");
    if (i + 1 < r2.size())
      c.expect(std::abs(r2[i + 1] - r2[i]) <= 0.6, "thm2 residual continuity");
  }
  c.note("thm2 final residual " + format_double(r2.back()));
}

void criterion_10_cli_determinism(const std::string& cli) {
  Criterion c("10 CLI determinism");
  if (cli.empty()) {
    c.expect(false, "no --cli path provided");
    return;
  }
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  auto run = [&](const std::string& args, const std::string& out) {
    const std::string cmd = cli + " " + args + " --out " + out + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  struct Case {
    std::string args;
  };
  const std::vector<Case> cases = {
      {"eta --kF 10 --grid 0:0.5:6 --seed 7"},
      {"patches --kF 10 --seed 7 --corridor 0"},
      {"floor --kF 10 --lambda 1 --grid 0:0.1:5 --seed 7"},
      {"simulate --mode thm2_oracle --kF 1 --M 2 --corridor 0 --n-max 20 "
       "--grid 0:1:5 --seed 7"},
  };
  int idx = 0;
  for (const auto& [args] : cases) {
    const std::string a = "acc_det_a" + std::to_string(idx) + ".csv";
    const std::string b = "acc_det_b" + std::to_string(idx) + ".csv";
    c.expect(run(args, a) == 0, "CLI run: " + args);
    c.expect(run(args, b) == 0, "CLI rerun: " + args);
    c.expect(!slurp(a).empty() && slurp(a) == slurp(b),
             "byte-identical CSVs for: " + args);
    std::remove(a.c_str());
    std::remove(b.c_str());
    std::remove((a + ".meta").c_str());
    std::remove((b + ".meta").c_str());
    ++idx;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

  criterion_1_exact_identities();
  criterion_2_explicit_bounds();
  criterion_3_bosonic_oracle();
  criterion_4_number_expectation();
  criterion_5_eta_curve();
  criterion_6_patch_asymptotics();
  criterion_7_gronwall_moments();
  criterion_8_corollary_machinery();
  criterion_9_residual_reports();
  criterion_10_cli_determinism(cli);

  if (failures == 0)
    std::puts("ALL ACCEPTANCE CRITERIA PASSED");
  else
    std::printf("%d ACCEPTANCE CRITERIA FAILED\n", failures);
  return failures;
}
