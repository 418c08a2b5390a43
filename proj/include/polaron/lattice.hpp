#pragma once

// Momentum-lattice geometry: the Fermi ball B_F, interaction support,
// the half-set Gamma and truncated mode sets. All membership tests are
// integer-exact (norm^2 against floor(radius^2)) so boundary modes never
// flip under floating-point noise. The mode order is lexicographic in
// (kx,ky,kz) everywhere; all fermionic sign conventions derive from it.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polaron {

struct Momentum {
  int kx = 0, ky = 0, kz = 0;

  friend auto operator<=>(const Momentum&, const Momentum&) = default;

  long long norm2() const {
    return static_cast<long long>(kx) * kx + static_cast<long long>(ky) * ky +
           static_cast<long long>(kz) * kz;
  }
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }

  Momentum operator+(const Momentum& o) const { return {kx + o.kx, ky + o.ky, kz + o.kz}; }
  Momentum operator-(const Momentum& o) const { return {kx - o.kx, ky - o.ky, kz - o.kz}; }
  Momentum operator-() const { return {-kx, -ky, -kz}; }
  bool is_zero() const { return kx == 0 && ky == 0 && kz == 0; }
};

inline std::string to_string(const Momentum& k) {
  return std::to_string(k.kx) + ":" + std::to_string(k.ky) + ":" + std::to_string(k.kz);
}

// Largest integer r2 with r2 <= radius*radius, tolerant of representation
// noise when the caller passes sqrt(n) for integer n.
inline long long squared_radius_limit(double radius) {
  if (radius < 0) throw std::invalid_argument("radius must be nonnegative");
  return static_cast<long long>(std::floor(radius * radius * (1.0 + 1e-12) + 1e-9));
}

namespace detail {
inline std::vector<Momentum> enumerate_ball(long long r2_limit) {
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2_limit)) + 1e-9));
  std::vector<Momentum> out;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      for (int z = -r; z <= r; ++z) {
        Momentum p{x, y, z};
        if (p.norm2() <= r2_limit) out.push_back(p);
      }
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace detail

// The filled Fermi ball: all integer momenta with |k| <= kF, plus the
// derived counts N(kF) and the plane-wave energy E_N^pw.
struct FermiBall {
  double kF = 0;
  long long kF2 = 0;  // integer membership threshold
  std::vector<Momentum> modes;
  std::size_t N = 0;
  long long EpW = 0;

  bool contains(const Momentum& p) const { return p.norm2() <= kF2; }
};

inline FermiBall build_fermi_ball(double kF) {
  FermiBall ball;
  ball.kF = kF;
  ball.kF2 = squared_radius_limit(kF);
  ball.modes = detail::enumerate_ball(ball.kF2);
  ball.N = ball.modes.size();
  for (const auto& m : ball.modes) ball.EpW += m.norm2();
  return ball;
}

// Interaction in momentum space: finite even support, nonnegative values.
class Potential {
 public:
  Potential() = default;

  static Potential from_pairs(const std::vector<std::pair<Momentum, double>>& pairs) {
    Potential V;
    for (const auto& [k, v] : pairs) V.values_[k] = v;
    V.validate();
    return V;
  }

  // V-hat = value on every 0 < |k| <= radius (the workhorse test potential).
  static Potential ball(double radius, double value, bool include_zero = false) {
    Potential V;
    for (const auto& k : detail::enumerate_ball(squared_radius_limit(radius)))
      if (include_zero || !k.is_zero()) V.values_[k] = value;
    V.validate();
    return V;
  }

  // File format: one "kx ky kz value" per line; '#' starts a comment.
  // Evenness is validated, never silently symmetrized.
  static Potential load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open potential file: " + path);
    Potential V;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      int x, y, z;
      double v;
      if (!(ss >> x)) continue;  // blank
      if (!(ss >> y >> z >> v))
        throw std::runtime_error("potential file " + path + ": malformed line " +
                                 std::to_string(lineno));
      Momentum k{x, y, z};
      if (V.values_.count(k))
        throw std::runtime_error("potential file " + path + ": duplicate momentum at line " +
                                 std::to_string(lineno));
      V.values_[k] = v;
    }
    V.validate();
    return V;
  }

  double operator()(const Momentum& k) const {
    auto it = values_.find(k);
    return it == values_.end() ? 0.0 : it->second;
  }
  bool in_support(const Momentum& k) const { return values_.count(k) != 0; }

  std::vector<Momentum> support() const {
    std::vector<Momentum> s;
    s.reserve(values_.size());
    for (const auto& [k, v] : values_) s.push_back(k);
    return s;  // std::map iterates in lex order
  }

  std::size_t size() const { return values_.size(); }

  // ||V||_1 over the full support
  double norm_l1() const {
    double s = 0;
    for (const auto& [k, v] : values_) s += std::abs(v);
    return s;
  }
  // ||V||_2
  double norm_l2() const {
    double s = 0;
    for (const auto& [k, v] : values_) s += v * v;
    return std::sqrt(s);
  }
  // ||V^{1/2}||_2 = sqrt(sum V(k))
  double norm_sqrt_l2() const {
    double s = 0;
    for (const auto& [k, v] : values_) s += v;
    return std::sqrt(s);
  }
  // support radius in lattice units (max |k| over the support)
  double support_radius() const {
    long long m = 0;
    for (const auto& [k, v] : values_) m = std::max(m, k.norm2());
    return std::sqrt(static_cast<double>(m));
  }

 private:
  void validate() const {
    for (const auto& [k, v] : values_) {
      if (v < 0)
        throw std::runtime_error("potential must be nonnegative at " + to_string(k));
      auto it = values_.find(-k);
      if (it == values_.end() || it->second != v)
        throw std::runtime_error("potential violates evenness at " + to_string(k));
    }
  }

  std::map<Momentum, double> values_;
};

// Half-set Gamma: one representative per +-pair of the support.
// Lexicographic-positive rule: k in Gamma iff k3>0, or k3=0 and k2>0,
// or k3=k2=0 and k1>0.
inline bool in_gamma_half_space(const Momentum& k) {
  if (k.kz != 0) return k.kz > 0;
  if (k.ky != 0) return k.ky > 0;
  return k.kx > 0;
}

inline std::vector<Momentum> gamma_set(const Potential& V) {
  std::vector<Momentum> gamma;
  for (const auto& k : V.support()) {
    if (k.is_zero())
      throw std::runtime_error("gamma_set: support must exclude the zero mode");
    if (!V.in_support(-k)) throw std::runtime_error("gamma_set: support not even");
    if (in_gamma_half_space(k)) gamma.push_back(k);
  }
  std::sort(gamma.begin(), gamma.end());
  return gamma;
}

// Finite truncation of the lattice for Fock-space work: everything with
// |p| <= p_cut, flagged inside/outside B_F.
struct ModeSet {
  std::vector<Momentum> modes;
  std::vector<bool> inside_ball;
  long long p_cut2 = 0;

  std::size_t size() const { return modes.size(); }

  // index of p in the fixed order; npos when absent
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t index_of(const Momentum& p) const {
    auto it = std::lower_bound(modes.begin(), modes.end(), p);
    if (it == modes.end() || !(*it == p)) return npos;
    return static_cast<std::size_t>(it - modes.begin());
  }
  bool contains(const Momentum& p) const { return index_of(p) != npos; }
};

inline ModeSet mode_set_from_list(std::vector<Momentum> modes, const FermiBall& ball) {
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  ModeSet ms;
  ms.modes = std::move(modes);
  ms.inside_ball.resize(ms.modes.size());
  long long m = 0;
  for (std::size_t i = 0; i < ms.modes.size(); ++i) {
    ms.inside_ball[i] = ball.contains(ms.modes[i]);
    m = std::max(m, ms.modes[i].norm2());
  }
  ms.p_cut2 = m;
  return ms;
}

inline ModeSet build_mode_set(const FermiBall& ball, const Potential& V, double p_cut) {
  if (p_cut < ball.kF)
    throw std::invalid_argument("build_mode_set: p_cut must be >= kF");
  (void)V;
  ModeSet ms;
  ms.p_cut2 = squared_radius_limit(p_cut);
  ms.modes = detail::enumerate_ball(ms.p_cut2);
  ms.inside_ball.resize(ms.modes.size());
  for (std::size_t i = 0; i < ms.modes.size(); ++i)
    ms.inside_ball[i] = ball.contains(ms.modes[i]);
  return ms;
}

// True when every p in B_F^c reachable by one V-hop from the ball is in the
// set, i.e. the set can represent all bosonizable pair excitations.
inline bool covers_interaction_shell(const ModeSet& ms, const FermiBall& ball,
                                     const Potential& V) {
  for (const auto& k : V.support())
    for (const auto& b : ball.modes) {
      const Momentum p = b + k;
      if (!ball.contains(p) && !ms.contains(p)) return false;
    }
  return true;
}

}  // namespace polaron
