#pragma once

// Equal-area decomposition of the Fermi sphere into M patches with
// corridors, per-k admissible index sets, and exact lattice pair counts
// m_alpha(k)^2 together with their asymptotic approximations.
//
// Construction (zonal scheme): patch 1 is a polar cap of area 4pi/M, the
// remaining north hemisphere is cut into ceil(sqrt(M)/2) equal-area collars,
// each collar into equal-azimuth cells so that the north hemisphere holds
// M/2 patches; the south hemisphere is the image under p -> -p. Corridors
// of total angular width 2R/kF are removed symmetrically at every patch
// boundary and areas are recomputed after the shrink. A lattice direction
// belongs to the first patch (ascending alpha) whose closed angular bounds
// contain it, so boundary ties resolve to the lower index.
//
// M = 1 is accepted as a diagnostic mode: a single all-sphere patch with no
// angular filtering at all.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "polaron/lattice.hpp"

namespace polaron {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double dot(const Momentum& k, const Vec3& w) {
  return k.kx * w[0] + k.ky * w[1] + k.kz * w[2];
}

// Default patch-count rule M = N^{16/45}, rounded to the nearest even count.
inline int patch_count_rule(double N) {
  const long rounded = std::lround(std::pow(N, 16.0 / 45.0) / 2.0);
  return static_cast<int>(2 * std::max(1l, rounded));
}

struct Patch {
  int alpha = 0;          // 1-based
  Vec3 center{0, 0, 1};   // unit vector
  double area = 0;        // steradians, after corridor shrink
  double theta_lo = 0, theta_hi = 0;  // polar interval (north representative)
  double phi_lo = 0, phi_hi = 0;      // azimuth interval
  bool full_azimuth = false;
  bool south = false;     // true: region is the reflection of patch alpha-M/2
  bool all_sphere = false;  // M=1 diagnostic
};

struct PatchSet {
  int M = 0;
  double corridor_halfwidth = 0;  // R in lattice units
  double kF = 0;
  double Nval = 0;   // N(kF), used for the admissibility threshold
  double delta = 0;
  double threshold = 0;  // N^{-delta}
  std::vector<Patch> patches;  // size M, patches[a-1] has alpha = a
  double corridor_area = 0;    // 4pi - sum of patch areas

  // N^{2 delta} << M << N^{2/3 - 2 delta} is advisory, never a hard error.
  bool patch_count_in_window() const {
    if (Nval <= 1 || M <= 1) return true;
    return M > std::pow(Nval, 2.0 * delta) &&
           M < std::pow(Nval, 2.0 / 3.0 - 2.0 * delta);
  }

  const Patch& patch(int alpha) const { return patches[static_cast<std::size_t>(alpha - 1)]; }

  // Containment of a direction in the (possibly shrunken) angular bounds.
  // South patches test the reflected direction against the north partner,
  // which makes the antipodal symmetry exact.
  bool contains_direction(int alpha, double x, double y, double z) const {
    const Patch& p = patch(alpha);
    if (p.all_sphere) return true;
    if (p.south) return contains_direction(alpha - M / 2, -x, -y, -z);
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r == 0) return false;  // origin has no direction
    double ct = z / r;
    ct = std::min(1.0, std::max(-1.0, ct));
    const double theta = std::acos(ct);
    if (theta < p.theta_lo || theta > p.theta_hi) return false;
    if (p.full_azimuth) return true;
    double phi = std::atan2(y, x);
    if (phi < 0) phi += 2 * std::numbers::pi;
    return phi >= p.phi_lo && phi <= p.phi_hi;
  }
  bool contains_direction(int alpha, const Momentum& p) const {
    return contains_direction(alpha, p.kx, p.ky, p.kz);
  }

  // First patch containing the direction, 0 if none (corridor).
  int patch_of(const Momentum& p) const {
    for (int a = 1; a <= M; ++a)
      if (contains_direction(a, p)) return a;
    return 0;
  }
};

inline PatchSet build_patch_set(int M, double kF, double N, double delta,
                                double corridor_halfwidth) {
  using std::numbers::pi;
  if (corridor_halfwidth < 0)
    throw std::invalid_argument("build_patch_set: corridor halfwidth must be >= 0");
  PatchSet ps;
  ps.M = M;
  ps.corridor_halfwidth = corridor_halfwidth;
  ps.kF = kF;
  ps.Nval = N;
  ps.delta = delta;
  ps.threshold = (delta > 0 && N > 0) ? std::pow(N, -delta) : 0.0;

  if (M == 1) {
    Patch p;
    p.alpha = 1;
    p.center = {0, 0, 1};
    p.area = 4 * pi;
    p.theta_lo = 0;
    p.theta_hi = pi;
    p.full_azimuth = true;
    p.all_sphere = true;
    ps.patches.push_back(p);
    ps.corridor_area = 0;
    return ps;
  }
  if (M < 2 || M % 2 != 0)
    throw std::invalid_argument("build_patch_set: M must be even (or 1 for diagnostics)");

  const double w = (kF > 0) ? corridor_halfwidth / kF : 0.0;  // angular halfwidth

  // Cap bounds before shrink: area 4pi/M = 2pi(1 - cos theta1).
  const double cos_theta1 = 1.0 - 2.0 / M;
  const double theta1 = std::acos(cos_theta1);

  const int half = M / 2;
  const int n_collars = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(M)) / 2.0));
  const int n_cells = half - 1;
  if (n_cells > 0 && n_collars == 0)
    throw std::invalid_argument("build_patch_set: inconsistent collar count");

  // Cells per collar: equal-area collars, integer apportionment by largest
  // remainder so the counts sum to half-1.
  std::vector<int> cells(static_cast<std::size_t>(n_collars), 0);
  if (n_cells > 0) {
    const double ideal = static_cast<double>(n_cells) / n_collars;
    int assigned = 0;
    for (auto& c : cells) {
      c = static_cast<int>(std::floor(ideal));
      assigned += c;
    }
    for (int j = 0; assigned < n_cells; ++j, ++assigned) cells[static_cast<std::size_t>(j % n_collars)] += 1;
  }

  std::vector<Patch> north;
  north.reserve(static_cast<std::size_t>(half));

  auto make_patch = [&](double tlo, double thi, double plo, double phi_hi_raw,
                        bool full_az) {
    Patch p;
    p.theta_lo = tlo;
    p.theta_hi = thi;
    p.phi_lo = plo;
    p.phi_hi = phi_hi_raw;
    p.full_azimuth = full_az;
    if (thi <= tlo || (!full_az && phi_hi_raw <= plo))
      throw std::runtime_error("build_patch_set: corridor too wide, empty patch");
    const double dphi = full_az ? 2 * pi : (phi_hi_raw - plo);
    p.area = dphi * (std::cos(tlo) - std::cos(thi));
    if (p.area <= 0) throw std::runtime_error("build_patch_set: nonpositive patch area");
    const double tc = std::acos(0.5 * (std::cos(tlo) + std::cos(thi)));
    const double pc = full_az ? 0.0 : 0.5 * (plo + phi_hi_raw);
    p.center = {std::sin(tc) * std::cos(pc), std::sin(tc) * std::sin(pc), std::cos(tc)};
    if (full_az && tlo == 0) p.center = {0, 0, 1};  // cap is centered on the pole
    return p;
  };

  // Cap: only the lower boundary shrinks.
  north.push_back(make_patch(0.0, std::max(theta1 - w, 0.0), 0.0, 2 * pi, true));

  // Collar boundaries in cos(theta), equal zone areas between theta1 and pi/2.
  const double zone = n_collars > 0 ? cos_theta1 / n_collars : 0.0;
  for (int j = 0; j < n_collars; ++j) {
    const double ct_hi = cos_theta1 - j * zone;        // upper boundary (smaller theta)
    const double ct_lo = cos_theta1 - (j + 1) * zone;  // lower boundary
    const double tlo = std::acos(std::min(1.0, ct_hi));
    const double thi = std::acos(std::max(-1.0, ct_lo));
    const double tlo_s = tlo + w;
    const double thi_s = thi - w;
    const int c = cells[static_cast<std::size_t>(j)];
    if (c <= 0) continue;
    if (c == 1) {
      north.push_back(make_patch(tlo_s, thi_s, 0.0, 2 * pi, true));
      continue;
    }
    const double tmid = 0.5 * (tlo_s + thi_s);
    const double wphi = w / std::max(std::sin(tmid), 1e-12);
    for (int i = 0; i < c; ++i) {
      const double plo = 2 * pi * i / c + wphi;
      const double phi = 2 * pi * (i + 1) / c - wphi;
      north.push_back(make_patch(tlo_s, thi_s, plo, phi, false));
    }
  }
  if (static_cast<int>(north.size()) != half)
    throw std::runtime_error("build_patch_set: cell apportionment failed");

  ps.patches.resize(static_cast<std::size_t>(M));
  double total_area = 0;
  for (int a = 1; a <= half; ++a) {
    Patch p = north[static_cast<std::size_t>(a - 1)];
    p.alpha = a;
    ps.patches[static_cast<std::size_t>(a - 1)] = p;

    Patch q = p;  // reflected image
    q.alpha = a + half;
    q.south = true;
    q.center = {-p.center[0], -p.center[1], -p.center[2]};
    q.theta_lo = pi - p.theta_hi;
    q.theta_hi = pi - p.theta_lo;
    if (!p.full_azimuth) {
      q.phi_lo = std::fmod(p.phi_lo + pi, 2 * pi);
      q.phi_hi = std::fmod(p.phi_hi + pi, 2 * pi);
    }
    ps.patches[static_cast<std::size_t>(a + half - 1)] = q;
    total_area += p.area + q.area;
  }
  ps.corridor_area = 4 * pi - total_area;
  return ps;
}

// North/south admissible patch indices for a given k.
struct IndexSet {
  Momentum k;
  std::vector<int> north;  // k . omega_alpha >= N^{-delta}
  std::vector<int> south;  // k . omega_alpha <= -N^{-delta}

  std::vector<int> all() const {
    std::vector<int> v = north;
    v.insert(v.end(), south.begin(), south.end());
    return v;
  }
  bool is_north(int alpha) const {
    return std::find(north.begin(), north.end(), alpha) != north.end();
  }
  bool contains(int alpha) const {
    return is_north(alpha) ||
           std::find(south.begin(), south.end(), alpha) != south.end();
  }
};

inline IndexSet index_set(const PatchSet& ps, const Momentum& k) {
  IndexSet is;
  is.k = k;
  for (const auto& p : ps.patches) {
    const double d = dot(k, p.center);
    if (d >= ps.threshold)
      is.north.push_back(p.alpha);
    else if (d <= -ps.threshold)
      is.south.push_back(p.alpha);
  }
  return is;
}

// One pair (p, p-k') with p in B_F^c cap B_alpha, p-k' in B_F cap B_alpha.
struct FermionPair {
  Momentum p;
  Momentum q;  // p - k'
};

struct PairWeight {
  int alpha = 0;
  Momentum k;
  bool north = true;       // hemisphere selected for k
  long long count_sq = 0;  // exact m_alpha(k')^2
  double n = 0;            // sqrt(count_sq)
};

namespace detail {
// Exact shell enumeration of the pairs for one (alpha, k') with k' already
// hemisphere-resolved. Loop order is lexicographic so counts are
// reproducible bit for bit.
inline std::vector<FermionPair> enumerate_pairs(const FermiBall& ball, const PatchSet& ps,
                                                int alpha, const Momentum& kprime) {
  std::vector<FermionPair> pairs;
  const double r_hi = ball.kF + kprime.norm();
  const long long r2_hi = squared_radius_limit(r_hi);
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2_hi)) + 1e-9));
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      for (int z = -r; z <= r; ++z) {
        Momentum p{x, y, z};
        const long long n2 = p.norm2();
        if (n2 <= ball.kF2 || n2 > r2_hi) continue;
        const Momentum q = p - kprime;
        if (q.norm2() > ball.kF2) continue;
        if (!ps.contains_direction(alpha, p)) continue;
        if (q.is_zero()) {
          if (!ps.patch(alpha).all_sphere) continue;  // origin has no direction
        } else if (!ps.contains_direction(alpha, q)) {
          continue;
        }
        pairs.push_back({p, q});
      }
  return pairs;
}
}  // namespace detail

inline Momentum hemisphere_momentum(const IndexSet& is, int alpha) {
  return is.is_north(alpha) ? is.k : -is.k;
}

inline std::vector<FermionPair> pair_list(const FermiBall& ball, const PatchSet& ps,
                                          const IndexSet& is, int alpha) {
  if (!is.contains(alpha))
    throw std::invalid_argument("pair_list: alpha not admissible for k");
  return detail::enumerate_pairs(ball, ps, alpha, hemisphere_momentum(is, alpha));
}

inline PairWeight pair_count(const FermiBall& ball, const PatchSet& ps, const IndexSet& is,
                             int alpha) {
  PairWeight w;
  w.alpha = alpha;
  w.k = is.k;
  w.north = is.is_north(alpha);
  w.count_sq = static_cast<long long>(pair_list(ball, ps, is, alpha).size());
  w.n = std::sqrt(static_cast<double>(w.count_sq));
  return w;
}

// sqrt of the leading-order n_alpha(k)^2 = (4 pi kF^2 / M) |k . omega_alpha|.
inline double n_alpha_asymptotic(const PatchSet& ps, int alpha, const Momentum& k) {
  const double u = std::abs(dot(k, ps.patch(alpha).center));
  return std::sqrt(4 * std::numbers::pi * ps.kF * ps.kF / ps.M * u);
}

// Exact per-direction pair sum against its closed-form comparator.
//
// `north` is sum over I_k^+ of m_alpha(k)^2, compared against kF^2 |k| pi
// (a half-sphere integral). The full sum over I_k with the hemisphere rule
// is `both`; by the exact lattice symmetry p -> -p it equals twice the
// per-direction value whenever the patch layout is reflection-symmetric.
struct SumNSquared {
  double north = 0;
  double both = 0;
  double comparator = 0;  // kF^2 |k| pi
};

inline SumNSquared sum_n_squared(const FermiBall& ball, const PatchSet& ps,
                                 const Momentum& k) {
  SumNSquared s;
  const IndexSet is = index_set(ps, k);
  for (int a : is.north) {
    const auto w = pair_count(ball, ps, is, a);
    s.north += static_cast<double>(w.count_sq);
    s.both += static_cast<double>(w.count_sq);
  }
  for (int a : is.south) {
    const auto w = pair_count(ball, ps, is, a);
    s.both += static_cast<double>(w.count_sq);
  }
  s.comparator = ball.kF * ball.kF * k.norm() * std::numbers::pi;
  return s;
}

}  // namespace polaron
