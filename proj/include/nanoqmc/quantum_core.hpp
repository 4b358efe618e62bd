#pragma once

// Linear-algebra substrate for one and two two-level atoms.
//
// Units: every frequency or rate is measured in a reference decay rate
// gamma_ref and every time in 1/gamma_ref; hbar = 1.
//
// Basis order for one atom is (g, e). For two atoms it is
// (gg, ge, eg, ee), where the left label belongs to atom 1, i.e. the
// two-atom space is atom1 (x) atom2.

#include <complex>
#include <span>

#include <Eigen/Dense>

namespace nanoqmc {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using OperatorMatrix = Eigen::MatrixXcd;

namespace basis {
inline constexpr int g = 0;
inline constexpr int e = 1;
inline constexpr int gg = 0;
inline constexpr int ge = 1;
inline constexpr int eg = 2;
inline constexpr int ee = 3;
}  // namespace basis

struct PhysicalParams {
  double omega1 = 0.0;   // Rabi frequency of atom 1
  double omega2 = 0.0;   // Rabi frequency of atom 2
  double delta = 0.0;    // laser detuning
  double gamma1 = 1.0;   // population decay rate of atom 1
  double gamma2 = 1.0;   // population decay rate of atom 2
  double gamma12 = 0.0;  // collective decay correction
  double delta12 = 0.0;  // dipole-dipole interaction strength

  // Throws ConfigError on negative or non-finite rates or |gamma12| > sqrt(gamma1 gamma2).
  void validate() const;
};

// |g><e| for a single atom.
OperatorMatrix lowering();
// S_j^- embedded in the two-atom space, j in {1, 2}.
OperatorMatrix lowering(int atom);
OperatorMatrix identity(int dim);

OperatorMatrix build_single_hamiltonian(double omega, double delta);

// H_a + W for two atoms: H_1 (x) 1 + 1 (x) H_2 + delta12 (S+ (x) S- + S- (x) S+).
OperatorMatrix build_pair_hamiltonian(const PhysicalParams& p);

// H_tot - iJ with J = 1/2 sum_m L_m^dagger L_m.
OperatorMatrix build_effective_hamiltonian(const OperatorMatrix& h_tot,
                                           std::span<const OperatorMatrix> jumps);

// exp(-i a t).
OperatorMatrix matrix_exponential(const OperatorMatrix& a, double t);

// exp(-i h_eff dt) psi, renormalized to unit norm.
StateVector propagate_no_jump(const StateVector& psi, const OperatorMatrix& h_eff, double dt);

StateVector ground_state(int atoms);
StateVector excited_state(int atoms);

bool is_hermitian(const OperatorMatrix& m, double tol = 0.0);

}  // namespace nanoqmc
