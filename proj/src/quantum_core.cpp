#include "nanoqmc/quantum_core.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "nanoqmc/errors.hpp"

namespace nanoqmc {

namespace {

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void PhysicalParams::validate() const {
  for (double v : {omega1, omega2, delta, gamma1, gamma2, gamma12, delta12}) {
    if (!finite(v)) throw ConfigError("physical parameters must be finite");
  }
  if (gamma1 < 0.0 || gamma2 < 0.0) throw ConfigError("decay rates must be non-negative");
  const double bound = std::sqrt(gamma1 * gamma2);
  if (std::abs(gamma12) > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "|gamma12| = " << std::abs(gamma12) << " exceeds sqrt(gamma1*gamma2) = " << bound;
    throw ConfigError(os.str());
  }
}

OperatorMatrix lowering() {
  OperatorMatrix s = OperatorMatrix::Zero(2, 2);
  s(basis::g, basis::e) = 1.0;
  return s;
}

OperatorMatrix identity(int dim) { return OperatorMatrix::Identity(dim, dim); }

OperatorMatrix lowering(int atom) {
  if (atom == 1) return Eigen::kroneckerProduct(lowering(), identity(2)).eval();
  if (atom == 2) return Eigen::kroneckerProduct(identity(2), lowering()).eval();
  throw ConfigError("atom index must be 1 or 2");
}

OperatorMatrix build_single_hamiltonian(double omega, double delta) {
  OperatorMatrix h(2, 2);
  h << 0.0, omega / 2.0, omega / 2.0, delta;
  return h;
}

OperatorMatrix build_pair_hamiltonian(const PhysicalParams& p) {
  const OperatorMatrix id = identity(2);
  OperatorMatrix h = Eigen::kroneckerProduct(build_single_hamiltonian(p.omega1, p.delta), id).eval();
  h += Eigen::kroneckerProduct(id, build_single_hamiltonian(p.omega2, p.delta)).eval();
  const OperatorMatrix s = lowering();
  const OperatorMatrix sp = s.adjoint();
  h += p.delta12 * (Eigen::kroneckerProduct(sp, s).eval() + Eigen::kroneckerProduct(s, sp).eval());
  return h;
}

OperatorMatrix build_effective_hamiltonian(const OperatorMatrix& h_tot,
                                           std::span<const OperatorMatrix> jumps) {
  OperatorMatrix j = OperatorMatrix::Zero(h_tot.rows(), h_tot.cols());
  for (const auto& l : jumps) {
    if (l.rows() != h_tot.rows() || l.cols() != h_tot.cols()) {
      throw ConfigError("jump operator dimension does not match the Hamiltonian");
    }
    j += 0.5 * l.adjoint() * l;
  }
  return h_tot - Complex(0.0, 1.0) * j;
}

OperatorMatrix matrix_exponential(const OperatorMatrix& a, double t) {
  const OperatorMatrix arg = Complex(0.0, -t) * a;
  return arg.exp();
}

StateVector propagate_no_jump(const StateVector& psi, const OperatorMatrix& h_eff, double dt) {
  StateVector out = matrix_exponential(h_eff, dt) * psi;
  out /= out.norm();
  return out;
}

StateVector ground_state(int atoms) {
  StateVector psi = StateVector::Zero(atoms == 1 ? 2 : 4);
  psi(0) = 1.0;
  return psi;
}

StateVector excited_state(int atoms) {
  StateVector psi = StateVector::Zero(atoms == 1 ? 2 : 4);
  psi(psi.size() - 1) = 1.0;
  return psi;
}

bool is_hermitian(const OperatorMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace nanoqmc
