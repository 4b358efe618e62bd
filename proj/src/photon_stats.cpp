#include "nanoqmc/photon_stats.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "nanoqmc/errors.hpp"

namespace nanoqmc {

namespace {

// Delays are multiples of dt; a delay sitting on a bin edge up to rounding is
// placed in the upper bin so every bin holds the same number of lattice points.
constexpr double kEdgeSlack = 1e-9;

int bin_count(double bin_width, double tau_max) {
  if (!(bin_width > 0.0) || !(tau_max >= bin_width) || !std::isfinite(tau_max)) {
    throw ConfigError("need 0 < bin_width <= tau_max");
  }
  return static_cast<int>(std::floor(tau_max / bin_width + kEdgeSlack));
}

void accumulate_pairs(const Trajectory& traj, double bin_width, int bins, std::vector<double>& counts) {
  const auto& ph = traj.photons;
  const double reach = bins * bin_width;
  for (std::size_t i = 0; i < ph.size(); ++i) {
    for (std::size_t j = i + 1; j < ph.size(); ++j) {
      const double delay = ph[j].time - ph[i].time;
      if (delay >= reach + kEdgeSlack * bin_width) break;
      const auto k = static_cast<long>(std::floor(delay / bin_width + kEdgeSlack));
      if (k < bins) counts[k] += 1.0;
    }
  }
}

CorrelationEstimate finish(std::vector<double> counts, double bin_width, double total_time,
                           std::int64_t photons) {
  CorrelationEstimate est;
  est.bin_width = bin_width;
  est.total_time = total_time;
  est.total_photons = photons;
  est.mean_rate = total_time > 0.0 ? static_cast<double>(photons) / total_time : 0.0;
  const double norm = est.mean_rate * est.mean_rate * total_time * bin_width;
  const std::size_t bins = counts.size();
  est.tau_bins.resize(bins);
  est.g2_values.resize(bins);
  est.sigma.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    est.tau_bins[k] = (static_cast<double>(k) + 0.5) * bin_width;
    est.g2_values[k] = counts[k] / norm;
    est.sigma[k] = std::sqrt(counts[k]) / norm;
  }
  est.counts = std::move(counts);
  return est;
}

}  // namespace

CorrelationEstimate estimate_g2(const Trajectory& traj, double bin_width, double tau_max) {
  return concat_g2(std::span<const Trajectory>(&traj, 1), bin_width, tau_max);
}

CorrelationEstimate concat_g2(std::span<const Trajectory> trajs, double bin_width, double tau_max) {
  if (trajs.empty()) throw ConfigError("no trajectories to correlate");
  const int bins = bin_count(bin_width, tau_max);
  std::vector<double> counts(bins, 0.0);
  double total_time = 0.0;
  std::int64_t photons = 0;
  for (const auto& t : trajs) {
    accumulate_pairs(t, bin_width, bins, counts);
    total_time += t.duration;
    photons += static_cast<std::int64_t>(t.photons.size());
  }
  if (photons < 2) throw ConfigError("at least two photons are needed to estimate g2");
  return finish(std::move(counts), bin_width, total_time, photons);
}

CorrelationEstimate rate_weighted_average(std::span<const CorrelationEstimate> estimates) {
  if (estimates.empty()) throw ConfigError("no estimates to average");
  const CorrelationEstimate& first = estimates.front();
  const std::size_t bins = first.tau_bins.size();
  double weight_sum = 0.0;
  double time_sum = 0.0;
  double rate_time = 0.0;
  for (const auto& e : estimates) {
    if (e.tau_bins.size() != bins || std::abs(e.bin_width - first.bin_width) > 1e-12 * first.bin_width) {
      throw ConfigError("correlation estimates use different bin grids");
    }
    weight_sum += e.mean_rate;
    time_sum += e.total_time;
    rate_time += e.mean_rate * e.total_time;
  }
  if (!(weight_sum > 0.0)) throw ConfigError("all estimates have zero emission rate");

  CorrelationEstimate out;
  out.bin_width = first.bin_width;
  out.tau_bins = first.tau_bins;
  out.g2_values.assign(bins, 0.0);
  out.counts.assign(bins, 0.0);
  out.sigma.assign(bins, 0.0);
  for (const auto& e : estimates) {
    const double w = e.mean_rate / weight_sum;
    for (std::size_t k = 0; k < bins; ++k) {
      out.g2_values[k] += w * e.g2_values[k];
      out.counts[k] += e.counts[k];
      out.sigma[k] += w * w * e.sigma[k] * e.sigma[k];
    }
    out.total_photons += e.total_photons;
  }
  for (auto& s : out.sigma) s = std::sqrt(s);
  out.total_time = time_sum;
  out.mean_rate = time_sum > 0.0 ? rate_time / time_sum : 0.0;
  return out;
}

double g2_zero_fixed_n(int n) {
  if (n < 1) throw ConfigError("atom number must be >= 1");
  return static_cast<double>(n - 1) / static_cast<double>(n);
}

double poisson_weight(double mu, int n) {
  if (!(mu >= 0.0) || n < 0) throw ConfigError("poisson_weight needs mu >= 0 and n >= 0");
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mu) - mu - std::lgamma(n + 1.0));
}

MixtureSpec MixtureSpec::poisson(double mu, std::vector<double> rates) {
  MixtureSpec s;
  s.mu = mu;
  s.n_max = static_cast<int>(rates.size());
  s.rates = std::move(rates);
  for (int n = 1; n <= s.n_max; ++n) s.weights.push_back(poisson_weight(mu, n));
  s.validate();
  return s;
}

MixtureSpec MixtureSpec::conditional(double mu, std::vector<double> rates) {
  MixtureSpec s = poisson(mu, std::move(rates));
  double total = 0.0;
  for (double w : s.weights) total += w;
  if (!(total > 0.0)) throw ConfigError("mixture has no weight on N >= 1");
  for (double& w : s.weights) w /= total;
  return s;
}

void MixtureSpec::validate() const {
  if (n_max < 1) throw ConfigError("mixture needs n_max >= 1");
  if (static_cast<int>(rates.size()) != n_max || static_cast<int>(weights.size()) != n_max) {
    throw ConfigError("mixture rates and weights must have n_max entries");
  }
  for (double r : rates) {
    if (!(r >= 0.0)) throw ConfigError("mixture rates must be non-negative");
  }
}

double mixture_g2_zero(const MixtureSpec& spec, std::span<const double> g2_per_n) {
  spec.validate();
  if (static_cast<int>(g2_per_n.size()) < spec.n_max) throw ConfigError("need one g2 value per atom number");
  double num = 0.0;
  double den = 0.0;
  for (int n = 0; n < spec.n_max; ++n) {
    const double w = spec.weights[n] * spec.rates[n];
    num += g2_per_n[n] * w;
    den += w;
  }
  if (!(den > 0.0)) throw ConfigError("all mixture rates are zero");
  return num / den;
}

double brightness(const MixtureSpec& spec) {
  spec.validate();
  if (!(spec.rates.front() > 0.0)) throw ConfigError("single-emitter rate must be positive");
  double total = 0.0;
  for (int n = 0; n < spec.n_max; ++n) total += spec.weights[n] * spec.rates[n];
  return total / spec.rates.front();
}

double number_fluctuation_g2_zero(double mu, int n_max) {
  double pairs = 0.0;
  double mean = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const double p = poisson_weight(mu, n);
    pairs += p * n * (n - 1);
    mean += p * n;
  }
  return mean > 0.0 ? pairs / (mean * mean) : 0.0;
}

std::string to_csv(const CorrelationEstimate& est) {
  std::string out = "tau,g2,counts,sigma\n";
  char line[160];
  for (std::size_t k = 0; k < est.tau_bins.size(); ++k) {
    std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g\n", est.tau_bins[k], est.g2_values[k],
                  est.counts[k], est.sigma[k]);
    out += line;
  }
  return out;
}

}  // namespace nanoqmc
