#pragma once

#include <utility>

#include "nanoqmc/quantum_core.hpp"

namespace nanoqmc {

// Symmetric 2x2 decay matrix [[gamma1, gamma12], [gamma12, gamma2]].
struct DecayMatrix {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma12 = 0.0;
};

// Eigen-channels of the decay matrix:
//   L1 = sqrt(lambda1) (alpha S1^- + beta S2^-)
//   L2 = sqrt(lambda2) (-beta S1^- + alpha S2^-)
struct JumpBasis {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double alpha = 1.0;
  double beta = 0.0;
  OperatorMatrix l1;
  OperatorMatrix l2;
};

// Throws ConfigError when gamma1 gamma2 < gamma12^2 or a rate is negative.
// When gamma12 and gamma1 - gamma2 both vanish (relative to the mean rate,
// threshold 1e-12) the channels are taken to be the independent atoms:
// alpha = 1, beta = 0.
JumpBasis decompose(const DecayMatrix& d);

// (p1, p2) with p_m = <psi|L_m^dagger L_m|psi> dt.
std::pair<double, double> jump_probabilities(const StateVector& psi, const JumpBasis& basis,
                                             double dt);

// sum_ij gamma_ij S_i^+ S_j^-, the operator that the jump channels must reproduce.
OperatorMatrix decay_operator(const DecayMatrix& d);

}  // namespace nanoqmc
