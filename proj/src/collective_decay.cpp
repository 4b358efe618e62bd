#include "nanoqmc/collective_decay.hpp"

#include <cmath>
#include <sstream>

#include "nanoqmc/errors.hpp"

namespace nanoqmc {

JumpBasis decompose(const DecayMatrix& d) {
  if (!std::isfinite(d.gamma1) || !std::isfinite(d.gamma2) || !std::isfinite(d.gamma12)) {
    throw ConfigError("decay matrix entries must be finite");
  }
  if (d.gamma1 < 0.0 || d.gamma2 < 0.0) throw ConfigError("decay rates must be non-negative");
  const double det = d.gamma1 * d.gamma2 - d.gamma12 * d.gamma12;
  if (det < -1e-12 * std::max(d.gamma1 * d.gamma2, d.gamma12 * d.gamma12)) {
    std::ostringstream os;
    os << "unphysical decay matrix: gamma1*gamma2 = " << d.gamma1 * d.gamma2
       << " < gamma12^2 = " << d.gamma12 * d.gamma12;
    throw ConfigError(os.str());
  }

  const double mean = 0.5 * (d.gamma1 + d.gamma2);
  const double half_diff = 0.5 * (d.gamma1 - d.gamma2);
  const double root = std::hypot(d.gamma12, half_diff);

  JumpBasis b;
  b.lambda1 = mean + root;
  // Rounding may push the lower rate a hair below zero for a singular matrix.
  b.lambda2 = std::max(0.0, mean - root);

  const double guard = 1e-12 * mean;
  if (std::abs(d.gamma12) <= guard && std::abs(half_diff) <= guard) {
    b.alpha = 1.0;
    b.beta = 0.0;
  } else if (half_diff >= 0.0) {
    const double num = half_diff + root;
    const double norm = std::hypot(d.gamma12, num);
    b.alpha = num / norm;
    b.beta = d.gamma12 / norm;
  } else {
    // half_diff + root cancels catastrophically here; use the equivalent form
    // obtained by multiplying through with (root - half_diff).
    const double num = d.gamma12;
    const double den_other = root - half_diff;
    const double norm = std::hypot(num, den_other);
    b.alpha = std::abs(num) / norm;
    b.beta = (d.gamma12 >= 0.0 ? 1.0 : -1.0) * den_other / norm;
  }

  const OperatorMatrix s1 = lowering(1);
  const OperatorMatrix s2 = lowering(2);
  b.l1 = std::sqrt(b.lambda1) * (b.alpha * s1 + b.beta * s2);
  b.l2 = std::sqrt(b.lambda2) * (-b.beta * s1 + b.alpha * s2);
  return b;
}

std::pair<double, double> jump_probabilities(const StateVector& psi, const JumpBasis& basis,
                                             double dt) {
  return {(basis.l1 * psi).squaredNorm() * dt, (basis.l2 * psi).squaredNorm() * dt};
}

OperatorMatrix decay_operator(const DecayMatrix& d) {
  const OperatorMatrix s1 = lowering(1);
  const OperatorMatrix s2 = lowering(2);
  return d.gamma1 * s1.adjoint() * s1 + d.gamma2 * s2.adjoint() * s2 +
         d.gamma12 * (s1.adjoint() * s2 + s2.adjoint() * s1);
}

}  // namespace nanoqmc
