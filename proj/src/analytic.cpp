#include <cmath>

#include "nanoqmc/dynamics.hpp"
#include "nanoqmc/errors.hpp"

namespace nanoqmc {

namespace {

void require_positive(double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("omega must be positive");
}

StateVector evolve_from_ground(double omega, double delta12, double t) {
  PhysicalParams p;
  p.omega1 = omega;
  p.omega2 = omega;
  p.delta12 = delta12;
  return matrix_exponential(build_pair_hamiltonian(p), t) * ground_state(2);
}

}  // namespace

// The drive couples |gg> only to the symmetric state (|ge> + |eg>)/sqrt2, and
// that three-level ladder has eigenvalues 0 and (delta12 -+ A)/2. The two
// nonzero modes give the A/B/C terms below. The zero mode contributes the
// time-independent amplitude <ee|v0><v0|gg> = -1/2, which makes the
// amplitude vanish at t = 0.
double analytic_pee(double omega, double delta12, double t) {
  require_positive(omega);
  const double d = delta12;
  const double w2 = omega * omega;
  const double a = std::sqrt(d * d + 4.0 * w2);
  const double minus = d - a;
  const double plus = d + a;
  const double b = 0.5 * minus * minus * minus - (d * d + w2) * minus - d * w2;
  const double c = 0.5 * plus * plus * plus - (d * d + w2) * plus - d * w2;

  const Complex i(0.0, 1.0);
  const Complex amp = 0.25 * w2 *
                          ((3.0 * d - a) / b * std::exp(i * (0.5 * minus * t)) +
                           (3.0 * d + a) / c * std::exp(i * (0.5 * plus * t))) -
                      0.5;
  return std::norm(amp);
}

double pee_propagated(double omega, double delta12, double t) {
  require_positive(omega);
  return std::norm(evolve_from_ground(omega, delta12, t)(basis::ee));
}

double single_excitation_product(double omega, double delta12, double t) {
  require_positive(omega);
  const StateVector psi = evolve_from_ground(omega, delta12, t);
  const double p1 = std::norm(psi(basis::eg)) + std::norm(psi(basis::ee));
  const double p2 = std::norm(psi(basis::ge)) + std::norm(psi(basis::ee));
  return p1 * p2;
}

}  // namespace nanoqmc
