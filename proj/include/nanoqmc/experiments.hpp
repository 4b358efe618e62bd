#pragma once

// Ensemble runners behind the command-line tool. Each run is a pure function
// of its configuration: trajectories are seeded from (master seed, stream,
// index) and results are assembled in index order, so the thread count never
// changes the output.

#include <cstdint>
#include <functional>
#include <vector>

#include "nanoqmc/dynamics.hpp"
#include "nanoqmc/nanotip.hpp"
#include "nanoqmc/photon_stats.hpp"
#include "nanoqmc/rng.hpp"

namespace nanoqmc {

// Runs body(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// One long trajectory cut into independent segments that start in the ground state.
struct SegmentedRun {
  std::vector<Trajectory> segments;
  std::vector<std::uint64_t> seeds;
  double max_jump_probability = 0.0;

  double duration() const;
  std::int64_t photons() const;
  double rate() const;
};

SegmentedRun simulate_segments(const PhysicalParams& p, int atoms, double total_duration, int segments,
                               double dt, std::uint64_t master_seed, StreamTag tag, int threads);

struct MixtureOptions {
  double omega = 1.0;  // Rabi frequency of each atom
  double delta = 0.0;
  double gamma = 1.0;  // gamma1 = gamma2
  double dt = 1e-3;
  double duration_one = 2e5;
  double mu = 1.0;  // the two-atom segment runs for duration_one * P(2)/P(1)
  int segments = 20;
  double bin_width = 0.05;
  double tau_max = 20.0;
  std::uint64_t seed = 1;
  int threads = 1;

  double duration_two() const;
  void validate() const;
};

struct MixturePoint {
  double delta12 = 0.0;
  double gamma12 = 0.0;
  CorrelationEstimate mixture;   // concatenated one- and two-atom streams
  CorrelationEstimate two_atom;  // two-atom stream alone
  double rate_one = 0.0;
  double rate_two = 0.0;
  double rate_mix = 0.0;
  // R_mix / R_1 with the mixture restricted to the simulated atom numbers.
  double brightness = 0.0;
  // (1/R_1) sum_N P_mu(N) R_N over N = 1, 2 with unnormalized Poisson weights.
  double brightness_poisson = 0.0;
  double max_jump_probability = 0.0;
  std::vector<std::uint64_t> seeds_two;
};

// Single-atom reference stream shared by every point of a sweep.
SegmentedRun simulate_single_reference(const MixtureOptions& opt);

MixturePoint run_mixture_point(const MixtureOptions& opt, const SegmentedRun& one, double delta12,
                               double gamma12);

struct TipExperimentOptions {
  tip::TipGeometry tip;
  double r_inner = 100.0;
  double r_outer = 200.0;
  tip::Spherical reference{100.0, 1.5707963267948966, 1.5707963267948966};
  double rabi_at_reference = 1.0;
  int n_one = 100;
  int n_two = 50;
  double duration = 1e5;
  double dt = 1e-3;
  double bin_width = 0.05;
  double tau_max = 20.0;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct Realization {
  int atoms = 1;
  std::vector<tip::Spherical> sites;
  PhysicalParams params;
  std::uint64_t seed = 0;
  CorrelationEstimate g2;
  double rate = 0.0;
  double max_jump_probability = 0.0;
};

struct TipExperimentResult {
  std::vector<Realization> one;
  std::vector<Realization> two;
  CorrelationEstimate average_one;
  CorrelationEstimate average_two;
  CorrelationEstimate average_mix;
  double rate_one = 0.0;
  double rate_two = 0.0;
  double rate_mix = 0.0;
  double brightness = 0.0;
};

TipExperimentResult run_tip_experiment(const TipExperimentOptions& opt);

}  // namespace nanoqmc
