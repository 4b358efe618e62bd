#pragma once

// Electromagnetic parameters of atoms near a subwavelength dielectric sphere
// (the fiber tip apex), centered at the origin.
//
// Lengths are in nanometres and rates in units of the free-space decay rate
// gamma0. Spherical coordinates (r, theta, phi) use the z axis (the
// polarization of the light in the fiber) as polar axis; the fiber and the
// propagation direction point along +y.

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nanoqmc/quantum_core.hpp"

namespace nanoqmc::tip {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

struct Spherical {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  Vec3 cartesian() const;
  static Spherical from_cartesian(const Vec3& x);
  Vec3 r_hat() const;
  Vec3 theta_hat() const;
  Vec3 phi_hat() const;
};

inline constexpr double kWarnSizeParameter = 0.3;
inline constexpr double kMaxSizeParameter = 1.0;

struct TipGeometry {
  double r_tip = 100.0;
  double epsilon = 2.1;
  double k0 = 2.0 * std::numbers::pi / 780.0;
  double e0 = 1.0;
  double gamma0 = 1.0;

  static TipGeometry from_wavelength(double r_tip, double epsilon, double wavelength);
  // Throws ConfigError for epsilon <= 0, non-positive sizes, or k0 r_tip >= 1.
  void validate() const;
  double size_parameter() const { return k0 * r_tip; }
  bool size_warning() const { return size_parameter() > kWarnSizeParameter; }
};

struct AtomSite {
  Spherical position;
  Vec3 dipole = Vec3::UnitZ();  // Cartesian unit vector
  double gamma = 1.0;
  double rabi = 0.0;
};

struct PairCoefficients {
  double gamma12 = 0.0;
  double delta12 = 0.0;
};

// alpha0 / (1 - i k^3 alpha0 / 6 pi), alpha0 = 4 pi R^3 (eps - 1)/(eps + 2).
Complex polarizability(const TipGeometry& tip, double k);

// Scattered dipole field of the driven sphere, components along (r_hat, theta_hat, phi_hat).
CVec3 local_field(const TipGeometry& tip, const Spherical& pos);

// Major axis of the polarization ellipse of `field`, a real unit vector in the
// same basis. Sign: positive component 1, then positive component 0, then 2.
// For circular polarization the axis closest to component 1 is returned.
Vec3 dipole_orientation(const CVec3& field);

// Perpendicular/parallel Purcell rates (in gamma0) at distance r from the center.
struct PurcellRates {
  double perpendicular = 1.0;
  double parallel = 1.0;
};
PurcellRates purcell_components(const TipGeometry& tip, double r);

// gamma_perp (d.r)^2 + gamma_par (1 - (d.r)^2) with `dipole` a Cartesian unit vector.
double purcell_rate(const TipGeometry& tip, const Spherical& pos, const Vec3& dipole);

// gamma12 and delta12 for two dipoles with Purcell-modified rates. Exactly
// symmetric under exchange of the sites. Throws ConfigError for coincident sites.
PairCoefficients pair_coefficients(const AtomSite& a, const AtomSite& b, double k0);

// Rabi frequencies proportional to |E| (Euclidean norm of the complex field),
// scaled so that `rabi_at_reference` is reached at `reference`.
struct RabiCalibration {
  Spherical reference{100.0, std::numbers::pi / 2.0, std::numbers::pi / 2.0};
  double rabi_at_reference = 1.0;
  double reference_field = 0.0;

  static RabiCalibration at(const TipGeometry& tip, const Spherical& reference, double rabi_at_reference);
};

double rabi_at(const Spherical& pos, const TipGeometry& tip, const RabiCalibration& cal);

// Uniform-in-volume positions in the shell r_inner <= r <= r_outer restricted
// to the forward half-space y > 0.
std::vector<Spherical> sample_sites(const TipGeometry& tip, double r_inner, double r_outer,
                                    std::size_t count, std::uint64_t seed);

double shell_volume(double r_inner, double r_outer);

// local_field -> dipole_orientation -> purcell_rate -> rabi_at for one position.
AtomSite make_site(const TipGeometry& tip, const Spherical& pos, const RabiCalibration& cal);

// PhysicalParams for one or two atoms at the given positions, Delta = 0.
// One atom: omega2 = delta12 = gamma12 = 0 and gamma2 = gamma0 (unused).
PhysicalParams realize_parameters(std::span<const Spherical> sites, const TipGeometry& tip,
                                  const RabiCalibration& cal);

enum class PairGeometry { A, B };  // A: second atom displaced along +z, B: along +y

struct MapPoint {
  double r = 0.0;
  double theta = 0.0;
  double gamma12 = 0.0;
  double delta12 = 0.0;
  bool valid = false;
};

// Atom 1 at (r, theta, phi = 90 deg), atom 2 displaced by r12 along the
// geometry's axis. Points with either atom inside the sphere are flagged invalid.
std::vector<MapPoint> parameter_map(const TipGeometry& tip, PairGeometry geometry,
                                    std::span<const double> r_grid,
                                    std::span<const double> theta_grid, double r12);

}  // namespace nanoqmc::tip
