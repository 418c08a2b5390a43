#pragma once

// Time propagation and the headline diagnostics: the Theorem-1 residual
// against the particle-hole-transformed microscopic dynamics, the Theorem-2
// residual against the coherent trajectory (fermionic and exactly-bosonic
// models), the Corollary gap-versus-floor comparison and Gronwall moment
// tracking. Each run returns a time-gridded report that serializes to CSV
// with full metadata.

#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "polaron/coherent.hpp"
#include "polaron/csv.hpp"
#include "polaron/fock.hpp"
#include "polaron/hamiltonians.hpp"
#include "polaron/lowerbound.hpp"
#include "polaron/propagate.hpp"

namespace polaron {

struct EvolutionReport {
  std::vector<double> grid;
  // deque keeps references to columns stable while new ones are added
  std::deque<std::pair<std::string, std::vector<double>>> columns;
  std::vector<std::pair<std::string, std::string>> metadata;

  std::vector<double>& column(const std::string& name) {
    for (auto& [n, c] : columns)
      if (n == name) return c;
    columns.emplace_back(name, std::vector<double>{});
    return columns.back().second;
  }
  const std::vector<double>& column(const std::string& name) const {
    for (auto& [n, c] : columns)
      if (n == name) return c;
    throw std::invalid_argument("EvolutionReport: no column " + name);
  }
  void meta(const std::string& k, const std::string& v) { metadata.emplace_back(k, v); }
  void meta(const std::string& k, double v) { metadata.emplace_back(k, format_double(v)); }

  void to_csv(const std::string& path) const {
    CsvWriter csv(path);
    for (const auto& [k, v] : metadata) csv.metadata(k, v);
    std::vector<std::string> names{"t"};
    for (const auto& [n, c] : columns) names.push_back(n);
    csv.header(names);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row{grid[i]};
      for (const auto& [n, c] : columns) row.push_back(c.at(i));
      csv.row(row);
    }
    csv.close();
  }
};

// Bundled geometry + couplings for one parameter point.
struct DeskConfig {
  double kF = 1.0;
  double lambda = 1.0;
  double beta = 0.0;
  int M = 0;  // 0: even-rounded N^{16/45}
  double delta = 2.0 / 15.0;
  double corridor = 0.0;  // halfwidth R in lattice units
  double p_cut = 0;       // 0: kF + support radius
  Potential V;
  std::uint64_t seed = 42;
};

struct DeskSetup {
  DeskConfig cfg;
  FermiBall ball;
  PatchSet ps;
  CoherentParams params;
  ModeSet modes;

  int M() const { return ps.M; }
};

inline DeskSetup make_desk(DeskConfig cfg) {
  DeskSetup d;
  d.ball = build_fermi_ball(cfg.kF);
  const int M = cfg.M > 0 ? cfg.M : patch_count_rule(static_cast<double>(d.ball.N));
  cfg.M = M;
  d.ps = build_patch_set(M, cfg.kF, static_cast<double>(d.ball.N), cfg.delta, cfg.corridor);
  d.params = make_coherent_params(cfg.lambda, d.ball, d.ps, cfg.V, true);
  const double p_cut = cfg.p_cut > 0 ? cfg.p_cut : cfg.kF + cfg.V.support_radius();
  cfg.p_cut = p_cut;
  d.modes = build_mode_set(d.ball, cfg.V, p_cut);
  d.cfg = cfg;
  return d;
}

// Smallest representable pair fraction across the weight table; 1 means the
// space holds every lattice pair of every entry.
inline double min_pair_fraction(const FockSpace& space, const PairWeightTable& t) {
  double frac = 1.0;
  for (const auto& row : t.entries)
    for (const auto& e : row) frac = std::min(frac, representable_fraction(space, e));
  return frac;
}

// Scatter a fixed-N sector vector into the Full-sector indexing.
inline Vec embed_in_full(const FockSpace& sector, const FockSpace& full, const Vec& v) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(full.dim()));
  for (std::size_t i = 0; i < sector.dim(); ++i) {
    const std::size_t j = full.index(sector.state(i));
    out[static_cast<Eigen::Index>(j)] = v[static_cast<Eigen::Index>(i)];
  }
  return out;
}

// Least-squares fit of C in t -> C (e^{C a t} - 1) d over a log-spaced scan.
inline double fit_growth_constant(const std::vector<double>& ts,
                                  const std::vector<double>& ys, double a, double d) {
  if (d <= 0) return 0;
  double best_c = 0, best_err = -1;
  for (int i = 0; i <= 400; ++i) {
    const double c = std::pow(10.0, -3.0 + 5.0 * i / 400.0);
    double err = 0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const double model = c * (std::exp(c * a * ts[j]) - 1.0) * d;
      err += (model - ys[j]) * (model - ys[j]);
    }
    if (best_err < 0 || err < best_err) {
      best_err = err;
      best_c = c;
    }
  }
  return best_c;
}

// ---------------------------------------------------------------------------
// Effective-dynamics residual || R* e^{-iHt} R psi - e^{-iH_eff t} psi || on
// the desk space, with the independently integrated Duhamel upper bound
// alongside.

struct Thm1Machinery {
  FockSpace full;
  FockSpace sector;
  FockOperator H_sector;     // microscopic H in the particle-number sector
  FockOperator H_full;       // microscopic H on the full space
  FockOperator Heff_full;    // effective (or tilde) Hamiltonian on the full space
  SparseOperator R;          // particle-hole unitary on the full space
  double dropped_weight = 0;

  Thm1Machinery(const DeskSetup& d, bool with_linear_coupling)
      : full(d.modes, Sector::full()),
        sector(d.modes, Sector::fixed_n(static_cast<int>(d.ball.N))),
        H_sector(sector, {}),
        H_full(full, {}),
        Heff_full(full, {}),
        R(particle_hole(full, d.ball)) {
    auto micro = micro_terms(full, d.ball, d.cfg.V, d.cfg.lambda,
                             /*require_shell_closure=*/false);
    dropped_weight = micro.dropped_weight;
    H_full = FockOperator(full, micro.terms);
    H_sector = FockOperator(sector, micro.terms);
    Heff_full = FockOperator(full, with_linear_coupling ? heff_terms(full, d.params)
                                                        : heff_tilde_terms(full, d.params));
  }
};

inline EvolutionReport thm1_residual(const DeskSetup& d, const std::vector<double>& grid,
                                     bool with_linear_coupling = true,
                                     const KrylovOptions& kopt = {}) {
  Thm1Machinery m(d, with_linear_coupling);
  EvolutionReport rep;
  rep.grid = grid;
  rep.meta("mode", with_linear_coupling ? "thm1" : "cor_gap");
  rep.meta("kF", d.cfg.kF);
  rep.meta("lambda", d.cfg.lambda);
  rep.meta("M", static_cast<double>(d.M()));
  rep.meta("delta", d.cfg.delta);
  rep.meta("n_modes", static_cast<double>(d.modes.size()));
  rep.meta("sector_dim", static_cast<double>(m.sector.dim()));
  rep.meta("full_dim", static_cast<double>(m.full.dim()));
  rep.meta("dropped_weight", m.dropped_weight);
  rep.meta("pair_representable_fraction", min_pair_fraction(m.full, d.params.weights));

  auto& resid = rep.column("residual");
  auto& duhamel = rep.column("duhamel_bound");

  const Vec omega_full = m.full.vacuum();
  Vec micro_state;
  {
    // R Omega = Omega_0: locate the filled-ball word in the sector
    Vec r_omega = m.R * omega_full;
    micro_state = Vec::Zero(static_cast<Eigen::Index>(m.sector.dim()));
    for (std::size_t i = 0; i < m.full.dim(); ++i)
      if (r_omega[static_cast<Eigen::Index>(i)] != cplx{}) {
        const std::size_t si = m.sector.index(m.full.state(i));
        micro_state[static_cast<Eigen::Index>(si)] = r_omega[static_cast<Eigen::Index>(i)];
      }
  }
  Vec eff_state = omega_full;

  auto mismatch_norm = [&](const Vec& v) {
    Vec rv = m.R * v;
    Vec hrv;
    m.H_full.apply(rv, hrv);
    Vec rhrv = m.R * hrv;
    Vec hev;
    m.Heff_full.apply(v, hev);
    return (rhrv - hev).norm();
  };

  double prev_t = 0;
  double duh = 0;
  double prev_g = mismatch_norm(eff_state);
  const int substeps = 4;  // refine the Duhamel trapezoid between grid points
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double dt = t - prev_t;
    if (dt > 0) {
      micro_state = krylov_expv(m.H_sector, micro_state, dt, kopt);
      const double h = dt / substeps;
      for (int j = 0; j < substeps; ++j) {
        eff_state = krylov_expv(m.Heff_full, eff_state, h, kopt);
        const double g = mismatch_norm(eff_state);
        duh += 0.5 * (prev_g + g) * h;
        prev_g = g;
      }
      prev_t = t;
    }
    Vec micro_full = embed_in_full(m.sector, m.full, micro_state);
    Vec back = m.R * micro_full;  // R* = R
    resid.push_back((back - eff_state).norm());
    duhamel.push_back(duh);
  }

  const double dval =
      d_of({d.cfg.lambda, d.cfg.kF, d.cfg.beta, static_cast<double>(d.M()),
            static_cast<double>(d.ball.N), d.cfg.delta, d.cfg.V, ThetaMode::ClosedForm, nullptr});
  const double cfit = fit_growth_constant(grid, resid, d.cfg.lambda * d.cfg.kF, dval);
  auto& model = rep.column("fitted_bound");
  for (double t : grid)
    model.push_back(cfit * (std::exp(cfit * d.cfg.lambda * d.cfg.kF * t) - 1.0) * dval);
  rep.meta("fitted_C", cfit);
  rep.meta("d_scale", dval);
  return rep;
}

// ---------------------------------------------------------------------------
// Coherent-state residual || e^{-iH_eff t} psi - e^{iP(t)} W(eta_t) psi ||.

enum class Thm2Model { Fermionic, BosonicOracle };

inline EvolutionReport thm2_residual(const DeskSetup& d, const std::vector<double>& grid,
                                     Thm2Model model, int oracle_n_max = 12,
                                     const KrylovOptions& kopt = {}) {
  EvolutionReport rep;
  rep.grid = grid;
  rep.meta("kF", d.cfg.kF);
  rep.meta("lambda", d.cfg.lambda);
  rep.meta("M", static_cast<double>(d.M()));

  if (model == Thm2Model::BosonicOracle) {
    rep.meta("mode", "thm2_oracle");
    rep.meta("n_max", static_cast<double>(oracle_n_max));
    const auto modes = oracle_modes_from_table(d.params);
    BosonicOracleSpace oracle(modes, oracle_n_max);
    rep.meta("oracle_dim", static_cast<double>(oracle.dim()));
    const SpMat H = oracle.effective_hamiltonian(d.params.EpW);
    DensePropagator prop{DMat(H)};
    const Vec vac = oracle.vacuum();
    auto& resid = rep.column("residual");
    auto& tail = rep.column("tail_mass");
    for (double t : grid) {
      const Vec lhs = prop.apply(t, vac);
      // amplitudes in oracle mode order
      std::vector<cplx> amps;
      for (const auto& bm : modes) {
        const double h =
            d.cfg.lambda * d.cfg.V(bm.k) * find_entry(d.params.weights, bm.k, bm.alpha).n;
        amps.push_back(eta_amplitude(bm.eps, h, t));
      }
      const SpMat B = oracle.weyl_generator(amps);
      Vec rhs = weyl_apply(B, vac, kopt);
      rhs *= std::exp(cplx(0, phase_P(d.params, t)));
      resid.push_back((lhs - rhs).norm());
      tail.push_back(oracle.coherent_tail_mass(amps));
    }
    return rep;
  }

  rep.meta("mode", "thm2_fermionic");
  FockSpace full(d.modes, Sector::full());
  rep.meta("full_dim", static_cast<double>(full.dim()));
  rep.meta("pair_representable_fraction", min_pair_fraction(full, d.params.weights));
  FockOperator Heff(full, heff_terms(full, d.params));
  const Vec vac = full.vacuum();
  Vec state = vac;
  auto& resid = rep.column("residual");
  auto& shape = rep.column("bound_shape");
  double prev_t = 0;
  for (double t : grid) {
    if (t > prev_t) {
      state = krylov_expv(Heff, state, t - prev_t, kopt);
      prev_t = t;
    }
    const EtaField eta = eta_at(d.params, t);
    const SparseOperator B = weyl_generator(full, d.params.weights, eta);
    Vec rhs = weyl_apply(B.mat, vac, kopt);
    rhs *= std::exp(cplx(0, phase_P(d.params, t)));
    resid.push_back((state - rhs).norm());
    shape.push_back((bound_f(d.cfg.V, 1.0, d.cfg.lambda * d.cfg.kF * t) - 1.0) *
                    std::pow(d.cfg.kF, -2.0 / 15.0));
  }
  // scale of the bound shape fitted to the measured residual
  const auto& sh = rep.column("bound_shape");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    num += resid[i] * sh[i];
    den += sh[i] * sh[i];
  }
  rep.meta("fitted_shape_scale", den > 0 ? num / den : 0.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Corollary: gap to the no-coupling evolution versus the computable floor.

inline EvolutionReport cor_gap(const DeskSetup& d, const std::vector<double>& grid,
                               const KrylovOptions& kopt = {}) {
  EvolutionReport rep = thm1_residual(d, grid, /*with_linear_coupling=*/false, kopt);
  rep.metadata.clear();
  rep.meta("mode", "cor_gap");
  rep.meta("kF", d.cfg.kF);
  rep.meta("lambda", d.cfg.lambda);
  FloorParams fp{d.cfg.lambda, d.cfg.kF,  d.cfg.beta,           static_cast<double>(d.M()),
                 static_cast<double>(d.ball.N), d.cfg.delta, d.cfg.V, ThetaMode::ClosedForm,
                 nullptr};
  auto& gap = rep.column("residual");
  auto& floor_col = rep.column("floor");
  auto& flag = rep.column("gap_ge_floor");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const FloorResult f = corollary_floor(fp, grid[i]);
    floor_col.push_back(f.floor);
    flag.push_back(gap[i] >= f.floor ? 1.0 : 0.0);
  }
  rep.meta("theta", theta_of(fp));
  rep.meta("d_scale", d_of(fp));
  return rep;
}

// ---------------------------------------------------------------------------
// Gronwall moments along the effective flow or the Weyl flow.

enum class MomentFlow { Heff, WeylB };

inline double moment_of(const FockSpace& space, const Vec& v, int n, int shift) {
  KahanSum acc;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const double occ = static_cast<double>(std::popcount(space.state(i))) + shift;
    acc.add(std::pow(occ, n) * std::norm(v[static_cast<Eigen::Index>(i)]));
  }
  return acc.value();
}

inline EvolutionReport moment_growth(const DeskSetup& d, const FockSpace& space, int n,
                                     const std::vector<double>& grid, MomentFlow flow,
                                     double weyl_time = 0.5, const KrylovOptions& kopt = {}) {
  EvolutionReport rep;
  rep.grid = grid;
  rep.meta("mode", flow == MomentFlow::Heff ? "moments_heff" : "moments_weylB");
  rep.meta("kF", d.cfg.kF);
  rep.meta("n", static_cast<double>(n));
  const Vec vac = space.vacuum();
  const double m0 = moment_of(space, vac, n, 3);  // <(N+3)^n> at t=0
  auto& moment = rep.column("moment");
  auto& ratio_c = rep.column("smallest_C");

  if (flow == MomentFlow::Heff) {
    FockOperator Heff(space, heff_terms(space, d.params));
    Vec state = vac;
    double prev_t = 0;
    for (double t : grid) {
      if (t > prev_t) {
        state = krylov_expv(Heff, state, t - prev_t, kopt);
        prev_t = t;
      }
      const double m = moment_of(space, state, n, 1);
      moment.push_back(m);
      const double a = n * d.cfg.lambda * d.cfg.kF * t;
      ratio_c.push_back((t > 0 && m > m0) ? std::log(m / m0) / a : 0.0);
    }
  } else {
    const EtaField eta = eta_at(d.params, weyl_time);
    const double eta_norm = std::sqrt(eta.norm_sq());
    rep.meta("eta_norm", eta_norm);
    const SparseOperator B = weyl_generator(space, d.params.weights, eta);
    ScaledHermitian op{&B.mat};
    for (double tau : grid) {
      const Vec state = krylov_expv(op, vac, tau, kopt);  // e^{tau B} vac
      const double m = moment_of(space, state, n, 1);
      moment.push_back(m);
      const double a = n * eta_norm * std::abs(tau);
      ratio_c.push_back((a > 0 && m > m0) ? std::log(m / m0) / a : 0.0);
    }
  }
  double cmax = 0;
  for (double c : ratio_c) cmax = std::max(cmax, c);
  rep.meta("fitted_C", cmax);
  rep.meta("moment0", m0);
  return rep;
}

// ---------------------------------------------------------------------------
// || Delta_y W(eta_t) phi (x) Omega || in the Truncated impurity mode.

inline EvolutionReport laplacian_diagnostic(const DeskSetup& d, double q_cut,
                                            const Momentum& q0,
                                            const std::vector<double>& grid) {
  // Fock factor: only the modes touched by the pair operators matter.
  std::vector<Momentum> touched;
  for (std::size_t gi = 0; gi < d.params.weights.gamma.size(); ++gi)
    for (const auto& e : d.params.weights.entries[gi])
      for (const auto& pr : e.pairs) {
        touched.push_back(pr.p);
        touched.push_back(pr.q);
      }
  FockSpace fock(mode_set_from_list(touched, d.ball), Sector::full());
  ImpuritySpace sp(fock, q_cut);
  EvolutionReport rep;
  rep.grid = grid;
  rep.meta("mode", "laplacian");
  rep.meta("kF", d.cfg.kF);
  rep.meta("q_cut", q_cut);
  rep.meta("dim", static_cast<double>(sp.dim()));
  const SpMat L = sp.kron(sp.minus_laplacian_y(), SpMat(identity_op(fock).mat));
  const Vec psi0 = sp.product_state(q0, fock.vacuum());
  auto& value = rep.column("laplacian_norm");
  auto& etacol = rep.column("eta_norm");
  for (double t : grid) {
    const EtaField eta = eta_at(d.params, t);
    const SpMat B = weyl_generator_impurity(sp, d.params.weights, eta);
    const Vec w = weyl_apply(B, psi0);
    value.push_back((L * w).norm());
    etacol.push_back(std::sqrt(eta.norm_sq()));
  }
  // fitted C for the bound shape C(x + x^4)(e^{Cx} + 1), x = ||eta_t||
  double cfit = 0;
  for (int i = 0; i <= 200; ++i) {
    const double c = 0.05 * (i + 1);
    bool ok = true;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double x = etacol[j];
      const double base = value[0];  // |q0|^2 survives at eta = 0
      if (value[j] > base + c * (x + x * x * x * x) * (std::exp(c * x) + 1.0)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      cfit = c;
      break;
    }
  }
  rep.meta("fitted_C", cfit);
  return rep;
}

}  // namespace polaron
