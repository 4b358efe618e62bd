#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nanoqmc/dynamics.hpp"

namespace nanoqmc {

// Histogram of photon-pair delays normalized to an uncorrelated stream.
// Bin k covers delays [k w, (k+1) w) and is reported at its center.
struct CorrelationEstimate {
  std::vector<double> tau_bins;
  std::vector<double> g2_values;
  std::vector<double> counts;
  std::vector<double> sigma;
  double bin_width = 0.0;
  double total_time = 0.0;
  double mean_rate = 0.0;
  std::int64_t total_photons = 0;

  double g2_zero() const { return g2_values.empty() ? 0.0 : g2_values.front(); }
  double g2_zero_sigma() const { return sigma.empty() ? 0.0 : sigma.front(); }
};

// Full HBT autocorrelation: every ordered pair (i < j) with delay below tau_max
// is counted. g2_k = C_k / (rate^2 T w) with rate = photons / T.
// Throws ConfigError for fewer than two photons or a bad bin grid.
CorrelationEstimate estimate_g2(const Trajectory& traj, double bin_width, double tau_max);

// Pairs are counted within each trajectory only; counts and durations are summed
// and normalized with the pooled rate. Zero-photon segments add duration only.
CorrelationEstimate concat_g2(std::span<const Trajectory> trajs, double bin_width, double tau_max);

// Weighted per-bin average of g2 curves, weights = mean_rate. The combined
// mean_rate is the duration-weighted mean; counts and photons are summed.
CorrelationEstimate rate_weighted_average(std::span<const CorrelationEstimate> estimates);

// (n - 1) / n for n independent emitters.
double g2_zero_fixed_n(int n);

// mu^n e^{-mu} / n!
double poisson_weight(double mu, int n);

// Truncated atom-number mixture. rates[N-1] and weights[N-1] belong to N atoms.
struct MixtureSpec {
  double mu = 1.0;
  int n_max = 2;
  std::vector<double> rates;
  std::vector<double> weights;

  // Weights P_mu(N) for N = 1..n_max.
  static MixtureSpec poisson(double mu, std::vector<double> rates);
  // Weights P_mu(N) / sum_{M=1..n_max} P_mu(M): the mixture restricted to the
  // simulated atom numbers, as used when only N = 1..n_max segments are run.
  static MixtureSpec conditional(double mu, std::vector<double> rates);
  void validate() const;
};

// sum g2_N P(N) R_N / sum P(N) R_N.
double mixture_g2_zero(const MixtureSpec& spec, std::span<const double> g2_per_n);

// (1 / R_1) sum P(N) R_N.
double brightness(const MixtureSpec& spec);

// Textbook intensity-correlation value <N(N-1)>/<N>^2 of a truncated Poisson
// mixture of independent emitters, for comparison with mixture_g2_zero.
double number_fluctuation_g2_zero(double mu, int n_max);

std::string to_csv(const CorrelationEstimate& est);

}  // namespace nanoqmc
