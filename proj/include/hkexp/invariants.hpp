#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <vector>

#include "hkexp/moments.hpp"
#include "hkexp/polynomial.hpp"

namespace hkexp {

// ---------------------------------------------------------------------------
// Heat-trace invariants
// ---------------------------------------------------------------------------

/// The three Gaussian-weighted integrals
///   I1 = int V e^{-s|x|^2},  I2 = int V^2 e^{-s|x|^2},  I3 = int (V^3 - V Delta V) e^{-s|x|^2},
/// exactly, as functions of symbolic s.
struct ExactInvariantTriple {
  GaussianIntegral i1;
  GaussianIntegral i2;
  GaussianIntegral i3;

  bool operator==(const ExactInvariantTriple&) const = default;
};

struct InvariantTriple {
  double i1 = 0.0;
  double i2 = 0.0;
  double i3 = 0.0;
};

/// Integrand of the third invariant, V^3 - V Delta V.
inline Polynomial third_invariant_density(const Polynomial& v) { return v * v * v - v * v.laplacian(); }

inline ExactInvariantTriple invariant_triple(const Polynomial& v) {
  return {gaussian_integral(v), gaussian_integral(v * v), gaussian_integral(third_invariant_density(v))};
}

inline InvariantTriple invariant_triple(const Polynomial& v, double s) {
  if (!(s > 0.0)) throw DomainError("invariant_triple: s must be positive");
  const ExactInvariantTriple t = invariant_triple(v);
  return {t.i1.eval(s), t.i2.eval(s), t.i3.eval(s)};
}

// ---------------------------------------------------------------------------
// Sphere functionals
// ---------------------------------------------------------------------------

/// Functionals of V on the sphere S_r = {|x| = r} (the two-point set {+-r} when n = 1):
///   m1 = int V,  m2 = int V^2,  v_dr = <V, dV/dr>,  dr_dr = |dV/dr|^2,  v_lap = <V, -Delta_{S_r} V>.
struct SphereFunctionals {
  double r = 0.0;
  double area = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double v_dr = 0.0;
  double dr_dr = 0.0;
  double v_lap = 0.0;
};

/// Unit-sphere Laplace-Beltrami operator on a polynomial, written with the Euler operator E = x.grad:
///   Delta_{S^{n-1}} V = |x|^2 Delta V - E(E V) - (n - 2) E V,
/// which is exact on every sphere once divided by r^2.
inline Polynomial unit_sphere_laplacian(const Polynomial& v) {
  const int n = v.dim();
  const Polynomial ev = v.euler();
  return Polynomial::radius_squared(n) * v.laplacian() - ev.euler() - ev * Rational(n - 2);
}

namespace detail {

inline void require_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("sphere radius must be positive");
}

}  // namespace detail

/// On S_r, dV/dr = (E V)/r, so every pairing is a sphere integral of a polynomial.
inline SphereFunctionals sphere_functionals(const Polynomial& v, double r) {
  detail::require_radius(r);
  const int n = v.dim();
  const Polynomial ev = v.euler();
  SphereFunctionals f;
  f.r = r;
  f.area = sphere_area(n, r);
  f.m1 = sphere_integral(v, r);
  f.m2 = sphere_integral(v * v, r);
  f.v_dr = sphere_integral(v * ev, r) / r;
  f.dr_dr = sphere_integral(ev * ev, r) / (r * r);
  f.v_lap = -sphere_integral(v * unit_sphere_laplacian(v), r) / (r * r);
  return f;
}

/// Pointwise potential on the plane for the numeric path.
using PlanarPotential = std::function<double(double, double)>;

struct NumericSphereOptions {
  int angles = 512;          // trapezoid nodes in theta; spectrally accurate for smooth periodic integrands
  double step = 1e-4;        // relative central-difference step for radial and angular derivatives
};

/// Same functionals for a pointwise V on R^2: trapezoid rule in theta and central differences.
inline SphereFunctionals sphere_functionals(const PlanarPotential& v, double r, const NumericSphereOptions& opt = {}) {
  detail::require_radius(r);
  if (opt.angles < 8) throw DomainError("numeric sphere functionals need at least 8 angles");
  const double dtheta = 2.0 * std::numbers::pi / opt.angles;
  const double hr = opt.step * std::max(r, 1.0);
  const double ht = opt.step;
  auto at = [&](double rad, double theta) { return v(rad * std::cos(theta), rad * std::sin(theta)); };
  SphereFunctionals f;
  f.r = r;
  f.area = sphere_area(2, r);
  for (int k = 0; k < opt.angles; ++k) {
    const double th = k * dtheta;
    const double val = at(r, th);
    const double dr = (at(r + hr, th) - at(r - hr, th)) / (2.0 * hr);
    const double dth = (at(r, th + ht) - at(r, th - ht)) / (2.0 * ht);
    f.m1 += val;
    f.m2 += val * val;
    f.v_dr += val * dr;
    f.dr_dr += dr * dr;
    // <V, -Delta_{S_r} V> = int |grad_{S_r} V|^2 = int (dV/dtheta / r)^2 r dtheta.
    f.v_lap += dth * dth / (r * r);
  }
  const double w = r * dtheta;
  f.m1 *= w;
  f.m2 *= w;
  f.v_dr *= w;
  f.dr_dr *= w;
  f.v_lap *= w;
  return f;
}

// ---------------------------------------------------------------------------
// Detectors
// ---------------------------------------------------------------------------

inline constexpr double kExactTolerance = 1e-10;
inline constexpr double kNumericTolerance = 1e-6;

struct ConstancyVerdict {
  bool constant = false;
  double value = 0.0;   // M1 / |S_r| when constant
  double defect = 0.0;  // |S_r| M2 - M1^2 >= 0 by Cauchy-Schwarz
  double relative_defect = 0.0;
};

/// Cauchy-Schwarz test: V is constant on S_r iff |S_r| M2 = M1^2.
inline ConstancyVerdict constancy_verdict(const SphereFunctionals& f, double tol) {
  if (!(tol > 0.0)) throw DomainError("detector tolerance must be positive");
  ConstancyVerdict out;
  const double scale = f.area * f.m2;
  out.defect = scale - f.m1 * f.m1;
  out.relative_defect = scale > 0.0 ? out.defect / scale : 0.0;
  out.constant = out.defect <= tol * scale;
  if (out.constant) out.value = f.m1 / f.area;
  return out;
}

inline ConstancyVerdict constancy_detector(const Polynomial& v, double r, double tol = kExactTolerance) {
  if (v.dim() < 2) throw DomainError("constancy detector needs n >= 2");
  return constancy_verdict(sphere_functionals(v, r), tol);
}

inline ConstancyVerdict constancy_detector(const PlanarPotential& v, double r, double tol = kNumericTolerance,
                                           const NumericSphereOptions& opt = {}) {
  return constancy_verdict(sphere_functionals(v, r, opt), tol);
}

/// Outcome of the odd-potential inequality
///   |V|^2 (|dV/dr|^2 + <V, -Delta_{S_r} V>) >= <V, dV/dr>^2 + lambda_1 |V|^4,  lambda_1 = (n-1)/r^2,
/// which is an equality exactly when V restricted to S_r is a degree-one spherical harmonic whose
/// radial derivative is proportional to V.
struct OddLinearVerdict {
  bool in_class = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;  // lhs - rhs >= 0
  double lambda1 = 0.0;
  double chi = 0.0;  // <V, dV/dr> / |V|^2
};

inline OddLinearVerdict odd_linear_verdict(const SphereFunctionals& f, int n, double tol) {
  if (!(tol > 0.0)) throw DomainError("detector tolerance must be positive");
  if (!(f.m2 > 0.0)) throw DomainError("odd-linear detector is undefined where V vanishes on the sphere");
  OddLinearVerdict out;
  out.lambda1 = (n - 1) / (f.r * f.r);
  out.lhs = f.m2 * (f.dr_dr + f.v_lap);
  out.rhs = f.v_dr * f.v_dr + out.lambda1 * f.m2 * f.m2;
  out.gap = out.lhs - out.rhs;
  out.in_class = out.gap <= tol * out.lhs;
  out.chi = f.v_dr / f.m2;
  return out;
}

inline OddLinearVerdict odd_linear_detector(const Polynomial& v, double r, double tol = kExactTolerance) {
  if (v.dim() < 2) throw DomainError("odd-linear detector needs n >= 2");
  if (!v.is_odd()) throw DomainError("odd-linear detector needs an odd potential");
  return odd_linear_verdict(sphere_functionals(v, r), v.dim(), tol);
}

inline OddLinearVerdict odd_linear_detector(const PlanarPotential& v, double r, double tol = kNumericTolerance,
                                            const NumericSphereOptions& opt = {}) {
  return odd_linear_verdict(sphere_functionals(v, r, opt), 2, tol);
}

/// Smallest annulus {inner <= |x| <= outer} about the origin containing the support, as seen on an r-grid.
/// The true inner radius lies in [inner_bracket, inner] and the true outer radius in [outer, outer_bracket]:
/// the brackets are the neighbouring grid radii where V vanished on the whole sphere.
struct SupportAnnulus {
  bool empty = true;
  double inner = 0.0;
  double outer = 0.0;
  double inner_bracket = 0.0;
  double outer_bracket = 0.0;
  double resolution = 0.0;  // grid spacing
};

inline SupportAnnulus support_annulus(const PlanarPotential& v, double r_max, int points, double threshold = 1e-14,
                                      const NumericSphereOptions& opt = {}) {
  if (!(r_max > 0.0) || points < 2) throw DomainError("support scan needs r_max > 0 and at least two radii");
  SupportAnnulus out;
  out.resolution = r_max / points;
  for (int k = 1; k <= points; ++k) {
    const double r = k * out.resolution;
    const SphereFunctionals f = sphere_functionals(v, r, opt);
    if (f.m2 / f.area <= threshold) continue;
    if (out.empty) {
      out.inner = r;
      out.inner_bracket = (k - 1) * out.resolution;
    }
    out.outer = r;
    out.outer_bracket = (k + 1) * out.resolution;
    out.empty = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consistency identities
// ---------------------------------------------------------------------------

/// int_0^inf (int_{S_r} P dsigma) e^{-s r^2} dr, assembled from exact sphere moments and the radial
/// moments int_0^inf r^k e^{-s r^2} dr. Equals int P e^{-s|x|^2} dx.
inline double radial_fubini_integral(const Polynomial& p, double s, int radial_shift = 0) {
  const int n = p.dim();
  const double omega = unit_sphere_area(n);
  double sum = 0.0;
  for (const auto& [a, c] : p.terms()) {
    const Rational avg = sphere_average(a);
    if (avg == 0) continue;
    const int k = a.order() + n - 1 + radial_shift;
    if (k < 0) throw InternalError("radial moment diverges at the origin");
    sum += Rational(c * avg).get_d() * omega * radial_gaussian_moment(k, s);
  }
  return sum;
}

inline InvariantTriple radial_fubini_triple(const Polynomial& v, double s) {
  return {radial_fubini_integral(v, s), radial_fubini_integral(v * v, s),
          radial_fubini_integral(third_invariant_density(v), s)};
}

/// int V Delta V e^{-s|x|^2} split in spherical coordinates,
///   Delta = d^2/dr^2 + (n-1)/r d/dr + Delta_{S_r},
/// where on S_r: r^2 d^2V/dr^2 = (E^2 - E) V and r dV/dr = E V.
struct LaplacianDecomposition {
  double radial_second = 0.0;
  double radial_first = 0.0;
  double angular = 0.0;
  double cartesian = 0.0;
  double total() const { return radial_second + radial_first + angular; }
};

inline LaplacianDecomposition laplacian_decomposition(const Polynomial& v, double s) {
  const int n = v.dim();
  const Polynomial ev = v.euler();
  LaplacianDecomposition out;
  out.radial_second = radial_fubini_integral(v * (ev.euler() - ev), s, -2);
  out.radial_first = radial_fubini_integral(v * ev * Rational(n - 1), s, -2);
  out.angular = radial_fubini_integral(v * unit_sphere_laplacian(v), s, -2);
  out.cartesian = gaussian_integral(v * v.laplacian()).eval(s);
  return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct InvariantReport {
  Polynomial potential;
  std::vector<double> s_grid;
  std::vector<InvariantTriple> invariants;
  std::vector<double> r_grid;
  std::vector<SphereFunctionals> spheres;
};

inline InvariantReport invariant_report(const Polynomial& v, const std::vector<double>& s_grid,
                                        const std::vector<double>& r_grid) {
  InvariantReport rep{v, s_grid, {}, r_grid, {}};
  const ExactInvariantTriple exact = invariant_triple(v);
  for (double s : s_grid) {
    if (!(s > 0.0)) throw DomainError("s-grid values must be positive");
    rep.invariants.push_back({exact.i1.eval(s), exact.i2.eval(s), exact.i3.eval(s)});
  }
  for (double r : r_grid) rep.spheres.push_back(sphere_functionals(v, r));
  return rep;
}

inline nlohmann::json to_json(const SphereFunctionals& f) {
  return {{"r", f.r},   {"area", f.area},   {"M1", f.m1},         {"M2", f.m2},
          {"V_dr", f.v_dr}, {"dr_dr", f.dr_dr}, {"V_lap_S", f.v_lap}};
}

inline nlohmann::json to_json(const InvariantReport& rep) {
  nlohmann::json j;
  j["potential"] = to_json(rep.potential);
  j["s_grid"] = rep.s_grid;
  nlohmann::json inv = nlohmann::json::array();
  for (std::size_t k = 0; k < rep.s_grid.size(); ++k)
    inv.push_back({{"s", rep.s_grid[k]},
                   {"I1", rep.invariants[k].i1},
                   {"I2", rep.invariants[k].i2},
                   {"I3", rep.invariants[k].i3}});
  j["invariants"] = inv;
  j["r_grid"] = rep.r_grid;
  nlohmann::json sph = nlohmann::json::array();
  for (const auto& f : rep.spheres) sph.push_back(to_json(f));
  j["spheres"] = sph;
  return j;
}

/// CSV with columns s, I1, I2, I3.
inline void write_invariants_csv(std::ostream& os, const InvariantReport& rep) {
  const auto old = os.precision(17);
  os << "s,I1,I2,I3\n";
  for (std::size_t k = 0; k < rep.s_grid.size(); ++k)
    os << rep.s_grid[k] << ',' << rep.invariants[k].i1 << ',' << rep.invariants[k].i2 << ',' << rep.invariants[k].i3
       << '\n';
  os.precision(old);
}

/// CSV with columns r, area, M1, M2, V_dr, dr_dr, V_lap_S.
inline void write_spheres_csv(std::ostream& os, const InvariantReport& rep) {
  const auto old = os.precision(17);
  os << "r,area,M1,M2,V_dr,dr_dr,V_lap_S\n";
  for (const auto& f : rep.spheres)
    os << f.r << ',' << f.area << ',' << f.m1 << ',' << f.m2 << ',' << f.v_dr << ',' << f.dr_dr << ',' << f.v_lap
       << '\n';
  os.precision(old);
}

}  // namespace hkexp
