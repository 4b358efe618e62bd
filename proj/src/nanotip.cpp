#include "nanoqmc/nanotip.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "nanoqmc/errors.hpp"
#include "nanoqmc/rng.hpp"

namespace nanoqmc::tip {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

bool inside(const TipGeometry& tip, double r) { return r < tip.r_tip * (1.0 - 1e-12); }

void require_outside(const TipGeometry& tip, const Spherical& pos) {
  if (!(pos.r > 0.0) || inside(tip, pos.r)) {
    std::ostringstream os;
    os << "position r = " << pos.r << " nm lies inside the tip (R = " << tip.r_tip << " nm)";
    throw ConfigError(os.str());
  }
}

Vec3 to_cartesian(const Spherical& pos, const Vec3& components) {
  return components(0) * pos.r_hat() + components(1) * pos.theta_hat() + components(2) * pos.phi_hat();
}

}  // namespace

Vec3 Spherical::cartesian() const { return r * r_hat(); }

Spherical Spherical::from_cartesian(const Vec3& x) {
  const double r = x.norm();
  if (r == 0.0) return {};
  return {r, std::acos(std::clamp(x.z() / r, -1.0, 1.0)), std::atan2(x.y(), x.x())};
}

Vec3 Spherical::r_hat() const {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Vec3 Spherical::theta_hat() const {
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
}

Vec3 Spherical::phi_hat() const { return {-std::sin(phi), std::cos(phi), 0.0}; }

TipGeometry TipGeometry::from_wavelength(double r_tip, double epsilon, double wavelength) {
  TipGeometry t;
  t.r_tip = r_tip;
  t.epsilon = epsilon;
  t.k0 = 2.0 * kPi / wavelength;
  t.validate();
  return t;
}

void TipGeometry::validate() const {
  if (!(r_tip > 0.0) || !std::isfinite(r_tip)) throw ConfigError("tip radius must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("permittivity must be real and positive");
  if (!(k0 > 0.0) || !std::isfinite(k0)) throw ConfigError("wavenumber must be positive");
  if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  if (!std::isfinite(e0) || e0 == 0.0) throw ConfigError("field amplitude must be finite and nonzero");
  if (!(size_parameter() < kMaxSizeParameter)) {
    std::ostringstream os;
    os << "k0*r_tip = " << size_parameter() << " is outside the subwavelength regime (< "
       << kMaxSizeParameter << ")";
    throw ConfigError(os.str());
  }
}

Complex polarizability(const TipGeometry& tip, double k) {
  const double a0 = 4.0 * kPi * std::pow(tip.r_tip, 3) * (tip.epsilon - 1.0) / (tip.epsilon + 2.0);
  return a0 / (1.0 - kI * (k * k * k / (6.0 * kPi)) * a0);
}

CVec3 local_field(const TipGeometry& tip, const Spherical& pos) {
  require_outside(tip, pos);
  const double x = tip.k0 * pos.r;
  const Complex pref = tip.e0 * polarizability(tip, tip.k0) / (4.0 * kPi * std::pow(pos.r, 3)) *
                       std::exp(kI * x);
  CVec3 e;
  e(0) = pref * 2.0 * std::cos(pos.theta) * (1.0 - kI * x);
  e(1) = pref * std::sin(pos.theta) * (1.0 - kI * x - x * x);
  e(2) = 0.0;
  return e;
}

Vec3 dipole_orientation(const CVec3& field) {
  const Vec3 a = field.real();
  const Vec3 b = field.imag();
  const double aa = a.squaredNorm();
  const double bb = b.squaredNorm();
  const double ab = a.dot(b);
  const double scale = aa + bb;
  if (!(scale > 0.0)) throw ConfigError("cannot orient a dipole along a zero field");

  Vec3 v;
  if (std::abs(aa - bb) <= 1e-12 * scale && std::abs(ab) <= 1e-12 * scale) {
    // Circular polarization: every direction in span{a, b} is a major axis.
    const Vec3 u1 = a.norm() >= b.norm() ? Vec3(a.normalized()) : Vec3(b.normalized());
    const Vec3 other = a.norm() >= b.norm() ? b : a;
    Vec3 u2 = other - other.dot(u1) * u1;
    u2 = u2.norm() > 0.0 ? Vec3(u2.normalized()) : Vec3::Zero();
    v = u1(1) * u1 + u2(1) * u2;
    if (v.norm() < 1e-12) v = u1(0) * u1 + u2(0) * u2;
    if (v.norm() < 1e-12) v = u1;
  } else {
    // maximize |a cos(phi) - b sin(phi)|^2
    const double phi = 0.5 * std::atan2(-2.0 * ab, aa - bb);
    v = a * std::cos(phi) - b * std::sin(phi);
  }
  v.normalize();
  constexpr double tie = 1e-14;
  if (v(1) < -tie || (std::abs(v(1)) <= tie && (v(0) < -tie || (std::abs(v(0)) <= tie && v(2) < 0.0)))) {
    v = -v;
  }
  return v;
}

PurcellRates purcell_components(const TipGeometry& tip, double r) {
  const double k = tip.k0;
  const double x = k * r;
  const Complex phase = polarizability(tip, k) * std::exp(2.0 * kI * x);
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x, x6 = x5 * x;
  const Complex perp = -1.0 / x4 + 2.0 / (kI * x5) + 1.0 / x6;
  const Complex para = 1.0 / x2 - 2.0 / (kI * x3) - 3.0 / x4 + 2.0 / (kI * x5) + 1.0 / x6;
  const double k3 = k * k * k;
  PurcellRates out;
  out.perpendicular = tip.gamma0 * (1.0 + 3.0 * k3 / (2.0 * kPi) * (phase * perp).imag());
  out.parallel = tip.gamma0 * (1.0 + 3.0 * k3 / (8.0 * kPi) * (phase * para).imag());
  return out;
}

double purcell_rate(const TipGeometry& tip, const Spherical& pos, const Vec3& dipole) {
  require_outside(tip, pos);
  const PurcellRates rates = purcell_components(tip, pos.r);
  const double c = dipole.dot(pos.r_hat());
  const double c2 = c * c;
  const double gamma = rates.perpendicular * c2 + rates.parallel * (1.0 - c2);
  if (!(gamma > 0.0)) {
    std::ostringstream os;
    os << "non-positive Purcell rate " << gamma << " at r = " << pos.r << " nm";
    throw InvariantError(os.str());
  }
  return gamma;
}

PairCoefficients pair_coefficients(const AtomSite& a, const AtomSite& b, double k0) {
  const Vec3 sep = a.position.cartesian() - b.position.cartesian();
  const double r12 = sep.norm();
  if (!(r12 > 0.0)) throw ConfigError("pair coefficients need distinct atom positions");
  const Vec3 n = sep / r12;
  const double d1d2 = a.dipole.dot(b.dipole);
  const double proj = a.dipole.dot(n) * b.dipole.dot(n);
  const double transverse = d1d2 - proj;
  const double near = d1d2 - 3.0 * proj;
  const double x = k0 * r12;
  const double s = std::sin(x), c = std::cos(x);
  const double x2 = x * x, x3 = x2 * x;
  const double root = std::sqrt(a.gamma * b.gamma);
  PairCoefficients out;
  out.gamma12 = root * 1.5 * (transverse * s / x + near * (c / x2 - s / x3));
  out.delta12 = root * 0.75 * (-transverse * c / x + near * (s / x2 + c / x3));
  return out;
}

RabiCalibration RabiCalibration::at(const TipGeometry& tip, const Spherical& reference,
                                    double rabi_at_reference) {
  RabiCalibration cal;
  cal.reference = reference;
  cal.rabi_at_reference = rabi_at_reference;
  cal.reference_field = local_field(tip, reference).norm();
  if (!(cal.reference_field > 0.0)) throw ConfigError("field vanishes at the Rabi calibration point");
  return cal;
}

double rabi_at(const Spherical& pos, const TipGeometry& tip, const RabiCalibration& cal) {
  if (!(cal.reference_field > 0.0)) throw ConfigError("Rabi calibration has zero reference field");
  return cal.rabi_at_reference * local_field(tip, pos).norm() / cal.reference_field;
}

std::vector<Spherical> sample_sites(const TipGeometry& tip, double r_inner, double r_outer,
                                    std::size_t count, std::uint64_t seed) {
  if (!(r_inner >= tip.r_tip * (1.0 - 1e-12)) || !(r_outer > r_inner)) {
    throw ConfigError("sampling shell needs r_tip <= r_inner < r_outer");
  }
  std::mt19937_64 engine(seed);
  const double lo = r_inner * r_inner * r_inner;
  const double hi = r_outer * r_outer * r_outer;
  std::vector<Spherical> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = std::cbrt(lo + uniform01(engine) * (hi - lo));
    const double cz = 2.0 * uniform01(engine) - 1.0;
    const double az = 2.0 * kPi * uniform01(engine);
    const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    const Vec3 dir(sz * std::cos(az), std::abs(sz * std::sin(az)), cz);
    Spherical s = Spherical::from_cartesian(r * dir);
    s.r = std::clamp(s.r, r_inner, r_outer);
    out.push_back(s);
  }
  return out;
}

double shell_volume(double r_inner, double r_outer) {
  return 4.0 / 3.0 * kPi * (std::pow(r_outer, 3) - std::pow(r_inner, 3));
}

AtomSite make_site(const TipGeometry& tip, const Spherical& pos, const RabiCalibration& cal) {
  AtomSite site;
  site.position = pos;
  const CVec3 field = local_field(tip, pos);
  site.dipole = to_cartesian(pos, dipole_orientation(field));
  site.gamma = purcell_rate(tip, pos, site.dipole);
  site.rabi = cal.rabi_at_reference * field.norm() / cal.reference_field;
  return site;
}

PhysicalParams realize_parameters(std::span<const Spherical> sites, const TipGeometry& tip,
                                  const RabiCalibration& cal) {
  PhysicalParams p;
  p.delta = 0.0;
  if (sites.size() == 1) {
    const AtomSite s = make_site(tip, sites[0], cal);
    p.omega1 = s.rabi;
    p.gamma1 = s.gamma;
    p.gamma2 = tip.gamma0;
    return p;
  }
  if (sites.size() != 2) throw ConfigError("realize_parameters takes one or two sites");
  const AtomSite s1 = make_site(tip, sites[0], cal);
  const AtomSite s2 = make_site(tip, sites[1], cal);
  const PairCoefficients pc = pair_coefficients(s1, s2, tip.k0);
  p.omega1 = s1.rabi;
  p.omega2 = s2.rabi;
  p.gamma1 = s1.gamma;
  p.gamma2 = s2.gamma;
  p.gamma12 = pc.gamma12;
  p.delta12 = pc.delta12;
  return p;
}

std::vector<MapPoint> parameter_map(const TipGeometry& tip, PairGeometry geometry,
                                    std::span<const double> r_grid,
                                    std::span<const double> theta_grid, double r12) {
  if (!(r12 > 0.0)) throw ConfigError("pair separation must be positive");
  const Vec3 shift = r12 * (geometry == PairGeometry::A ? Vec3::UnitZ() : Vec3::UnitY());
  // Only the field shape matters for the dipole directions; any calibration works.
  const RabiCalibration cal = RabiCalibration::at(tip, {tip.r_tip, kPi / 2.0, kPi / 2.0}, 1.0);
  std::vector<MapPoint> out;
  out.reserve(r_grid.size() * theta_grid.size());
  for (double r : r_grid) {
    for (double theta : theta_grid) {
      MapPoint pt;
      pt.r = r;
      pt.theta = theta;
      const Spherical p1{r, theta, kPi / 2.0};
      const Spherical p2 = Spherical::from_cartesian(p1.cartesian() + shift);
      pt.valid = !inside(tip, p1.r) && !inside(tip, p2.r);
      if (pt.valid) {
        const AtomSite s1 = make_site(tip, p1, cal);
        const AtomSite s2 = make_site(tip, p2, cal);
        const PairCoefficients pc = pair_coefficients(s1, s2, tip.k0);
        pt.gamma12 = pc.gamma12 / tip.gamma0;
        pt.delta12 = pc.delta12 / tip.gamma0;
      } else {
        pt.gamma12 = std::numeric_limits<double>::quiet_NaN();
        pt.delta12 = std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(pt);
    }
  }
  return out;
}

}  // namespace nanoqmc::tip
