#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nanoqmc/collective_decay.hpp"
#include "nanoqmc/quantum_core.hpp"

namespace nanoqmc {

// Hamiltonian plus decay channels for one or two atoms.
//
// One atom: H = build_single_hamiltonian(omega1, delta), one channel sqrt(gamma1) S^-.
// Two atoms: H = build_pair_hamiltonian(p), channels from decompose(). Channels
// with a zero rate are kept so that channel labels stay 1 and 2.
struct EmitterModel {
  int atoms = 1;
  PhysicalParams params;
  OperatorMatrix hamiltonian;
  std::vector<OperatorMatrix> jumps;

  static EmitterModel build(const PhysicalParams& p, int atoms);
  int dimension() const { return atoms == 1 ? 2 : 4; }
};

struct SimConfig {
  double dt = 1e-3;
  double duration = 1.0;
  std::uint64_t seed = 0;
  StateVector initial_state = ground_state(1);

  void validate() const;
};

struct Photon {
  double time = 0.0;
  int channel = 1;
};

struct Trajectory {
  std::vector<Photon> photons;
  double duration = 0.0;
  // Largest p1 + p2 seen in any step.
  double max_jump_probability = 0.0;

  double emission_rate() const {
    return duration > 0.0 ? static_cast<double>(photons.size()) / duration : 0.0;
  }
};

inline constexpr double kJumpProbabilityWarn = 0.05;
inline constexpr double kJumpProbabilityLimit = 0.2;

// Fixed-step quantum-jump trajectory. The atom number follows the dimension of
// cfg.initial_state. A photon's timestamp is the start time of the step in
// which its jump fired. Throws InvariantError if p1 + p2 > 0.2 in any step.
Trajectory qmc_trajectory(const PhysicalParams& p, const SimConfig& cfg);
Trajectory qmc_trajectory(const EmitterModel& model, const SimConfig& cfg);

// Same stochastic process as qmc_trajectory (same seed, same draws) but
// records the excited-state population of each atom every `stride` steps,
// starting at t = 0. Row k holds (P_e(atom 1), P_e(atom 2)) at t = k*stride*dt.
std::vector<std::array<double, 2>> sample_excitations(const EmitterModel& model,
                                                      const SimConfig& cfg, int stride);

struct DensityMatrix {
  OperatorMatrix entries;

  static DensityMatrix pure(const StateVector& psi);
  int dimension() const { return static_cast<int>(entries.rows()); }
  double trace() const { return entries.trace().real(); }
  double hermiticity_defect() const;
  double min_eigenvalue() const;
  // Throws InvariantError unless Hermitian within 1e-10, trace 1 within 1e-8
  // and no eigenvalue below -1e-8.
  void validate() const;
};

struct DensitySample {
  double time = 0.0;
  DensityMatrix rho;
};

// Fixed-step RK4 integration of the Lindblad equation written with the
// decay matrix gamma_ij directly. One sample every `output_stride` steps,
// plus the initial and final state. Each sample is validated.
std::vector<DensitySample> lindblad_integrate(const DensityMatrix& rho0, const PhysicalParams& p,
                                              double dt, double t_end, int output_stride = 1);

// Steady state reached from the ground state: integrate until the largest
// entry of drho/dt drops below 1e-10, at most until t = 1e3.
DensityMatrix steady_state(const PhysicalParams& p, int atoms);

// Photon-counting g2(tau) from the quantum regression theorem:
//   g2(tau) = Tr[K e^{L tau}(J rho_ss)] / Tr[K rho_ss]^2
// with K = sum_ij gamma_ij S_i^+ S_j^- and J rho = sum_ij gamma_ij S_j^- rho S_i^+.
// For one atom this is Tr[S+S- e^{L tau}(S- rho S+)] / Tr[S+S- rho]^2.
// tau_grid must be non-negative and non-decreasing.
std::vector<double> g2_regression(const PhysicalParams& p, int atoms,
                                  std::span<const double> tau_grid);

// |<ee|psi(t)>|^2 for psi(0) = |gg>, Omega1 = Omega2 = omega, Delta = 0, no decay.
// Closed form; cross-checked against pee_propagated.
double analytic_pee(double omega, double delta12, double t);
// Same quantity from the matrix exponential of the pair Hamiltonian.
double pee_propagated(double omega, double delta12, double t);
// P1(t) P2(t), each the probability that the given atom is excited.
double single_excitation_product(double omega, double delta12, double t);

}  // namespace nanoqmc
