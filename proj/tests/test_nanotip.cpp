#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "nanoqmc/errors.hpp"
#include "nanoqmc/nanotip.hpp"

using namespace nanoqmc;
using namespace nanoqmc::tip;

namespace {

constexpr double kPi = std::numbers::pi;
const double kDeg = kPi / 180.0;

// Perpendicular Purcell factor evaluated independently in long double with the
// bracket expanded into real and imaginary parts by hand.
long double perpendicular_reference(long double r_tip, long double eps, long double k, long double r) {
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double a0 = 4.0L * pi * r_tip * r_tip * r_tip * (eps - 1.0L) / (eps + 2.0L);
  const long double damp = k * k * k * a0 / (6.0L * pi);
  // a0 / (1 - i damp) = a0 (1 + i damp) / (1 + damp^2)
  const std::complex<long double> alpha(a0 / (1.0L + damp * damp), a0 * damp / (1.0L + damp * damp));
  const long double x = k * r;
  const std::complex<long double> phase(std::cos(2.0L * x), std::sin(2.0L * x));
  // -1/x^4 + 2/(i x^5) + 1/x^6 = (-1/x^4 + 1/x^6) - 2i/x^5
  const std::complex<long double> bracket(-1.0L / std::pow(x, 4) + 1.0L / std::pow(x, 6), -2.0L / std::pow(x, 5));
  return 1.0L + 3.0L * k * k * k / (2.0L * pi) * (alpha * phase * bracket).imag();
}

AtomSite site_at(const Vec3& x, const Vec3& dipole, double gamma = 1.0) {
  AtomSite s;
  s.position = Spherical::from_cartesian(x);
  s.dipole = dipole.normalized();
  s.gamma = gamma;
  return s;
}

}  // namespace

TEST_CASE("polarizability") {
  TipGeometry t;
  t.epsilon = 1.0;
  CHECK(std::abs(polarizability(t, t.k0)) == 0.0);
  t.epsilon = 2.1;
  const double a0 = 4.0 * kPi * 1e6 * (1.1 / 4.1);
  CHECK(a0 == doctest::Approx(3.372e6).epsilon(1e-3));
  CHECK(std::abs(polarizability(t, 0.0) - a0) < 1e-15 * a0);
  const double damp = std::pow(t.k0, 3) * a0 / (6.0 * kPi);
  const Complex expect = a0 / Complex(1.0, -damp);
  CHECK(std::abs(polarizability(t, t.k0) - expect) < 1e-9 * a0);
  CHECK(polarizability(t, t.k0).imag() > 0.0);
}

TEST_CASE("geometry validation") {
  TipGeometry t;
  CHECK_NOTHROW(t.validate());
  CHECK(t.size_warning());
  t.epsilon = -1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t.epsilon = 2.1;
  t.r_tip = 200.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  CHECK_THROWS_AS(TipGeometry::from_wavelength(10.0, 2.1, 0.0), ConfigError);
  CHECK_FALSE(TipGeometry::from_wavelength(10.0, 2.1, 780.0).size_warning());
}

TEST_CASE("local field components") {
  const TipGeometry t;
  const CVec3 axis = local_field(t, {150.0, 0.0, 1.0});
  CHECK(std::abs(axis(1)) == 0.0);
  CHECK(std::abs(axis(2)) == 0.0);
  CHECK(std::abs(axis(0)) > 0.0);

  const double r = 130.0, x = t.k0 * r;
  const CVec3 side = local_field(t, {r, kPi / 2, 0.3});
  CHECK(std::abs(side(0)) < 1e-15 * std::abs(side(1)));
  const double pref = std::abs(t.e0 * polarizability(t, t.k0) / (4 * kPi * r * r * r));
  CHECK(std::abs(side(1)) == doctest::Approx(pref * std::abs(Complex(1.0 - x * x, -x))).epsilon(1e-13));

  // Far zone: E_theta dominates and falls like k0^2 / r.
  const double far1 = 1e6, far2 = 2e6;
  const CVec3 f1 = local_field(t, {far1, 1.0, 0.0});
  const CVec3 f2 = local_field(t, {far2, 1.0, 0.0});
  CHECK(std::abs(f1(0)) < 1e-3 * std::abs(f1(1)));
  CHECK(std::abs(f1(1)) / std::abs(f2(1)) == doctest::Approx(2.0).epsilon(1e-3));
  const double farfield = std::abs(t.e0 * polarizability(t, t.k0)) / (4 * kPi) * t.k0 * t.k0 / far1 * std::sin(1.0);
  CHECK(std::abs(f1(1)) == doctest::Approx(farfield).epsilon(1e-3));

  CHECK_THROWS_AS(local_field(t, {99.0, 1.0, 0.0}), ConfigError);
}

TEST_CASE("dipole orientation") {
  const Vec3 real = dipole_orientation(CVec3(Complex(0.6, 0), Complex(0.8, 0), 0.0));
  CHECK((real - Vec3(0.6, 0.8, 0.0)).norm() < 1e-15);
  const Vec3 phased = dipole_orientation(CVec3(Complex(0, 0.6), Complex(0, 0.8), 0.0));
  CHECK((phased - Vec3(0.6, 0.8, 0.0)).norm() < 1e-15);
  const Vec3 flipped = dipole_orientation(CVec3(Complex(0.6, 0), Complex(-0.8, 0), 0.0));
  CHECK((flipped - Vec3(-0.6, 0.8, 0.0)).norm() < 1e-15);

  const Vec3 circ = dipole_orientation(CVec3(Complex(1, 0), Complex(0, 1), 0.0));
  CHECK((circ - Vec3(0.0, 1.0, 0.0)).norm() < 1e-12);

  CHECK_THROWS_AS(dipole_orientation(CVec3::Zero()), ConfigError);

  // Major axis maximizes |Re(e^{i phi} E)| over phi; invariant under global phase.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const CVec3 e(Complex(g(rng), g(rng)), Complex(g(rng), g(rng)), 0.0);
    const Vec3 v = dipole_orientation(e);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    double best = 0.0;
    Vec3 best_dir;
    for (int k = 0; k < 20000; ++k) {
      const double phi = kPi * k / 20000.0;
      const Vec3 w = (std::exp(Complex(0.0, phi)) * e).real();
      if (w.norm() > best) {
        best = w.norm();
        best_dir = w.normalized();
      }
    }
    CHECK(std::abs(std::abs(v.dot(best_dir)) - 1.0) < 1e-6);
    const Vec3 rotated = dipole_orientation(std::exp(Complex(0.0, g(rng))) * e);
    CHECK((rotated - v).norm() < 1e-9);
  }
}

TEST_CASE("Purcell rates") {
  const TipGeometry t;
  const double far = 1e3 / t.k0;
  const PurcellRates pr = purcell_components(t, far);
  CHECK(std::abs(pr.perpendicular - 1.0) < 1e-6);
  CHECK(std::abs(pr.parallel - 1.0) < 1e-6);

  const Spherical side{140.0, kPi / 2, 0.7};
  const Vec3 tangential = side.theta_hat();
  CHECK(purcell_rate(t, side, tangential) == purcell_components(t, 140.0).parallel);
  CHECK(purcell_rate(t, side, side.r_hat()) == purcell_components(t, 140.0).perpendicular);

  for (double r : {100.0, 110.0, 150.0, 400.0, 5000.0}) {
    const long double ref = perpendicular_reference(100.0L, 2.1L, 2.0L * 3.141592653589793238462643383279502884L / 780.0L, r);
    CAPTURE(r);
    CHECK(std::abs(purcell_components(t, r).perpendicular - static_cast<double>(ref)) < 1e-10);
  }
  // A dielectric sphere enhances the radial dipole at contact.
  CHECK(purcell_components(t, 110.0).perpendicular > 1.0);

  const Vec3 mixed = (side.r_hat() + side.phi_hat()).normalized();
  CHECK(purcell_rate(t, side, mixed) ==
        doctest::Approx(0.5 * (purcell_components(t, 140.0).perpendicular + purcell_components(t, 140.0).parallel)));
}

TEST_CASE("pair coefficients") {
  const double k0 = 1.0;
  const Vec3 z = Vec3::UnitZ();

  // Parallel dipoles perpendicular to the separation, short range.
  for (double x : {0.01, 0.001}) {
    const PairCoefficients pc = pair_coefficients(site_at({1e4, 0, 0}, z), site_at({1e4 + x, 0, 0}, z), k0);
    CHECK(std::abs(pc.gamma12 - 1.0) < 1e-4);
    const double limit = 0.75 / (x * x * x);
    CHECK(std::abs(pc.delta12 - limit) < (x == 0.01 ? 1e-2 : 1e-4) * limit);
  }
  // Generic orientations, short range, with unequal rates.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 d1 = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 d2 = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 n = Vec3(g(rng), g(rng), g(rng)).normalized();
    const double x = 0.001;
    const Vec3 origin(5e3, 1e3, -2e3);
    const AtomSite a = site_at(origin, d1, 1.3), b = site_at(origin + x * n, d2, 0.8);
    const PairCoefficients pc = pair_coefficients(a, b, k0);
    const double root = std::sqrt(1.3 * 0.8);
    const double orient = d1.dot(d2) - 3.0 * d1.dot(n) * d2.dot(n);
    CHECK(std::abs(pc.gamma12 - root * d1.dot(d2)) < 1e-4 * root);
    if (std::abs(orient) > 0.05) {
      CHECK(std::abs(pc.delta12 - 0.75 * root * orient / (x * x * x)) < 1e-4 * std::abs(0.75 * root * orient / (x * x * x)));
    }
    // Exchange symmetry holds bit for bit.
    const PairCoefficients rev = pair_coefficients(b, a, k0);
    CHECK(rev.gamma12 == pc.gamma12);
    CHECK(rev.delta12 == pc.delta12);
    CHECK(std::abs(pc.gamma12) <= root * (1 + 1e-12));
  }

  const PairCoefficients at_pi = pair_coefficients(site_at({1e4, 0, 0}, z), site_at({1e4 + kPi, 0, 0}, z), k0);
  CHECK(std::abs(at_pi.gamma12 - (-3.0 / (2.0 * kPi * kPi))) < 1e-10);

  const PairCoefficients far = pair_coefficients(site_at({1e4, 0, 0}, z), site_at({1e4 + 1e3, 0, 0}, z), k0);
  CHECK(std::abs(far.gamma12) < 1e-2);
  CHECK(std::abs(far.delta12) < 1e-2);

  CHECK_THROWS_AS(pair_coefficients(site_at({1, 2, 3}, z), site_at({1, 2, 3}, z), k0), ConfigError);
}

TEST_CASE("Rabi calibration") {
  const TipGeometry t;
  const Spherical ref{100.0, kPi / 2, kPi / 2};
  const RabiCalibration cal = RabiCalibration::at(t, ref, 1.0);
  CHECK(rabi_at(ref, t, cal) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rabi_at({200.0, kPi / 2, kPi / 2}, t, cal) < 1.0);
  const double x = t.k0 * 100.0;
  const double ratio = std::abs(2.0 * Complex(1.0, -x)) / std::abs(Complex(1.0 - x * x, -x));
  CHECK(rabi_at({100.0, 0.0, 0.0}, t, cal) == doctest::Approx(ratio).epsilon(1e-13));
  const RabiCalibration doubled = RabiCalibration::at(t, ref, 2.0);
  CHECK(rabi_at({150.0, 1.0, 2.0}, t, doubled) == doctest::Approx(2.0 * rabi_at({150.0, 1.0, 2.0}, t, cal)));
}

TEST_CASE("site sampling") {
  const TipGeometry t;
  const std::size_t n = 100000;
  const auto sites = sample_sites(t, 100.0, 200.0, n, 77);
  REQUIRE(sites.size() == n);
  std::vector<double> u;
  u.reserve(n);
  for (const auto& s : sites) {
    CHECK(s.r >= 100.0);
    CHECK(s.r <= 200.0);
    CHECK(s.cartesian().y() >= 0.0);
    u.push_back((std::pow(s.r, 3) - 1e6) / (8e6 - 1e6));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max({d, std::abs(u[i] - static_cast<double>(i) / n), std::abs(u[i] - static_cast<double>(i + 1) / n)});
  }
  // Critical value of the one-sample KS statistic at p = 0.01.
  CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));

  double mean_z = 0.0;
  for (const auto& s : sites) mean_z += s.cartesian().z() / s.r;
  CHECK(std::abs(mean_z / n) < 0.01);

  const auto again = sample_sites(t, 100.0, 200.0, 10, 77);
  for (std::size_t i = 0; i < 10; ++i) CHECK(again[i].cartesian() == sites[i].cartesian());
  CHECK_THROWS_AS(sample_sites(t, 50.0, 200.0, 10, 1), ConfigError);

  CHECK(shell_volume(100.0, 200.0) * 1e-21 == doctest::Approx(2.93e-14).epsilon(1e-3));
}

TEST_CASE("parameter realization") {
  const TipGeometry t;
  const RabiCalibration cal = RabiCalibration::at(t, {100.0, kPi / 2, kPi / 2}, 1.0);
  const std::vector<Spherical> one{{130.0, 1.2, 0.8}};
  const PhysicalParams p1 = realize_parameters(one, t, cal);
  CHECK(p1.omega2 == 0.0);
  CHECK(p1.delta12 == 0.0);
  CHECK(p1.gamma12 == 0.0);
  CHECK(p1.gamma2 == t.gamma0);
  CHECK(p1.delta == 0.0);
  CHECK(p1.omega1 == doctest::Approx(rabi_at(one[0], t, cal)));

  // Two atoms 20 nm apart beside the tip.
  const Spherical a{120.0, kPi / 2, kPi / 2};
  const Spherical b = Spherical::from_cartesian(a.cartesian() + Vec3(0, 0, 20.0));
  const std::vector<Spherical> two{a, b};
  const PhysicalParams p2 = realize_parameters(two, t, cal);
  CHECK(std::abs(p2.delta12) > 10.0);
  CHECK(std::abs(p2.gamma12) <= std::sqrt(p2.gamma1 * p2.gamma2) * (1 + 1e-9));
  CHECK_NOTHROW(p2.validate());
}

TEST_CASE("parameter maps") {
  const TipGeometry t;
  std::vector<double> rs, ths;
  for (int i = 0; i <= 20; ++i) rs.push_back(100.0 + 10.0 * i);
  for (int j = 0; j <= 36; ++j) ths.push_back(5.0 * j * kDeg);
  const auto a = parameter_map(t, PairGeometry::A, rs, ths, 50.0);
  REQUIRE(a.size() == rs.size() * ths.size());
  int invalid = 0;
  const RabiCalibration cal = RabiCalibration::at(t, {100.0, kPi / 2, kPi / 2}, 1.0);
  for (const auto& pt : a) {
    const Spherical p1{pt.r, pt.theta, kPi / 2};
    const Spherical p2 = Spherical::from_cartesian(p1.cartesian() + Vec3(0, 0, 50.0));
    const bool expect_valid = p2.r >= 100.0 * (1 - 1e-12);
    CHECK(pt.valid == expect_valid);
    if (!pt.valid) {
      ++invalid;
      CHECK(std::isnan(pt.gamma12));
      continue;
    }
    const AtomSite s1 = make_site(t, p1, cal), s2 = make_site(t, p2, cal);
    CHECK(std::abs(pt.gamma12) <= std::sqrt(s1.gamma * s2.gamma) * (1 + 1e-9));
  }
  CHECK(invalid > 0);
  for (const auto& pt : parameter_map(t, PairGeometry::B, rs, ths, 50.0)) CHECK(pt.valid);

  // Far from the tip only the 50 nm free-space coupling of two z dipoles stays.
  const std::vector<double> far_r{3e6}, far_th{kPi / 2};
  const auto far = parameter_map(t, PairGeometry::A, far_r, far_th, 50.0);
  const double x = t.k0 * 50.0;
  const double free_delta = 0.75 * (-2.0) * (std::sin(x) / (x * x) + std::cos(x) / (x * x * x));
  const double free_gamma = 1.5 * (-2.0) * (std::cos(x) / (x * x) - std::sin(x) / (x * x * x));
  CHECK(far[0].delta12 == doctest::Approx(free_delta).epsilon(1e-4));
  CHECK(far[0].gamma12 == doctest::Approx(free_gamma).epsilon(1e-4));
}
