#include "nanoqmc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "nanoqmc/errors.hpp"

namespace nanoqmc {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

double SegmentedRun::duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

std::int64_t SegmentedRun::photons() const {
  std::int64_t n = 0;
  for (const auto& s : segments) n += static_cast<std::int64_t>(s.photons.size());
  return n;
}

double SegmentedRun::rate() const {
  const double t = duration();
  return t > 0.0 ? static_cast<double>(photons()) / t : 0.0;
}

SegmentedRun simulate_segments(const PhysicalParams& p, int atoms, double total_duration, int segments,
                               double dt, std::uint64_t master_seed, StreamTag tag, int threads) {
  if (segments < 1) throw ConfigError("segment count must be >= 1");
  const EmitterModel model = EmitterModel::build(p, atoms);
  SegmentedRun run;
  run.segments.resize(segments);
  run.seeds.resize(segments);
  for (int i = 0; i < segments; ++i) run.seeds[i] = derive_seed(master_seed, tag, static_cast<std::uint64_t>(i));
  SimConfig cfg;
  cfg.dt = dt;
  cfg.duration = total_duration / segments;
  cfg.initial_state = ground_state(atoms);
  cfg.validate();
  parallel_for(static_cast<std::size_t>(segments), threads, [&](std::size_t i) {
    SimConfig local = cfg;
    local.seed = run.seeds[i];
    run.segments[i] = qmc_trajectory(model, local);
  });
  for (const auto& s : run.segments) run.max_jump_probability = std::max(run.max_jump_probability, s.max_jump_probability);
  return run;
}

double MixtureOptions::duration_two() const {
  return duration_one * poisson_weight(mu, 2) / poisson_weight(mu, 1);
}

void MixtureOptions::validate() const {
  if (!(omega >= 0.0)) throw ConfigError("omega must be non-negative");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (segments < 1) throw ConfigError("segments must be >= 1");
  if (!(duration_one / segments >= dt) || !(duration_two() / segments >= dt)) {
    throw ConfigError("segment durations must be at least one step");
  }
  if (!(bin_width > 0.0) || !(tau_max >= bin_width)) throw ConfigError("need 0 < bin_width <= tau_max");
}

SegmentedRun simulate_single_reference(const MixtureOptions& opt) {
  opt.validate();
  PhysicalParams p;
  p.omega1 = opt.omega;
  p.delta = opt.delta;
  p.gamma1 = opt.gamma;
  p.gamma2 = opt.gamma;
  return simulate_segments(p, 1, opt.duration_one, opt.segments, opt.dt, opt.seed, StreamTag::single_atom,
                           opt.threads);
}

namespace {

// Estimate for a stream that may hold fewer than two photons.
CorrelationEstimate estimate_or_empty(std::span<const Trajectory> trajs, double bin_width, double tau_max) {
  std::int64_t photons = 0;
  double duration = 0.0;
  for (const auto& t : trajs) {
    photons += static_cast<std::int64_t>(t.photons.size());
    duration += t.duration;
  }
  if (photons >= 2) return concat_g2(trajs, bin_width, tau_max);
  CorrelationEstimate est;
  const int bins = static_cast<int>(std::floor(tau_max / bin_width + 1e-9));
  est.bin_width = bin_width;
  est.total_time = duration;
  est.total_photons = photons;
  est.mean_rate = duration > 0.0 ? static_cast<double>(photons) / duration : 0.0;
  for (int k = 0; k < bins; ++k) est.tau_bins.push_back((k + 0.5) * bin_width);
  est.g2_values.assign(bins, 0.0);
  est.counts.assign(bins, 0.0);
  est.sigma.assign(bins, 0.0);
  return est;
}

}  // namespace

MixturePoint run_mixture_point(const MixtureOptions& opt, const SegmentedRun& one, double delta12,
                               double gamma12) {
  opt.validate();
  PhysicalParams p;
  p.omega1 = opt.omega;
  p.omega2 = opt.omega;
  p.delta = opt.delta;
  p.gamma1 = opt.gamma;
  p.gamma2 = opt.gamma;
  p.gamma12 = gamma12;
  p.delta12 = delta12;
  p.validate();
  const SegmentedRun two = simulate_segments(p, 2, opt.duration_two(), opt.segments, opt.dt, opt.seed,
                                             StreamTag::atom_pair, opt.threads);

  std::vector<Trajectory> all = one.segments;
  all.insert(all.end(), two.segments.begin(), two.segments.end());

  MixturePoint pt;
  pt.delta12 = delta12;
  pt.gamma12 = gamma12;
  pt.mixture = concat_g2(all, opt.bin_width, opt.tau_max);
  pt.two_atom = estimate_or_empty(two.segments, opt.bin_width, opt.tau_max);
  pt.rate_one = one.rate();
  pt.rate_two = two.rate();
  pt.rate_mix = pt.mixture.mean_rate;
  pt.brightness = brightness(MixtureSpec::conditional(opt.mu, {pt.rate_one, pt.rate_two}));
  pt.brightness_poisson = brightness(MixtureSpec::poisson(opt.mu, {pt.rate_one, pt.rate_two}));
  pt.max_jump_probability = std::max(one.max_jump_probability, two.max_jump_probability);
  pt.seeds_two = two.seeds;
  return pt;
}

void TipExperimentOptions::validate() const {
  tip.validate();
  if (!(r_inner >= tip.r_tip) || !(r_outer > r_inner)) throw ConfigError("need r_tip <= r_inner < r_outer");
  if (n_one < 1 || n_two < 0) throw ConfigError("need at least one single-atom realization");
  if (!(dt > 0.0) || !(duration >= dt)) throw ConfigError("need 0 < dt <= duration");
  if (!(bin_width > 0.0) || !(tau_max >= bin_width)) throw ConfigError("need 0 < bin_width <= tau_max");
  if (!(rabi_at_reference > 0.0)) throw ConfigError("reference Rabi frequency must be positive");
}

TipExperimentResult run_tip_experiment(const TipExperimentOptions& opt) {
  opt.validate();
  const auto cal = tip::RabiCalibration::at(opt.tip, opt.reference, opt.rabi_at_reference);
  const std::size_t n_sites = static_cast<std::size_t>(opt.n_one + 2 * opt.n_two);
  const auto sites = tip::sample_sites(opt.tip, opt.r_inner, opt.r_outer, n_sites,
                                       derive_seed(opt.seed, StreamTag::site_sampling, 0));

  TipExperimentResult res;
  res.one.resize(opt.n_one);
  res.two.resize(opt.n_two);
  for (int i = 0; i < opt.n_one; ++i) {
    Realization& r = res.one[i];
    r.atoms = 1;
    r.sites = {sites[i]};
    r.params = tip::realize_parameters(r.sites, opt.tip, cal);
    r.seed = derive_seed(opt.seed, StreamTag::single_atom, static_cast<std::uint64_t>(i));
  }
  for (int j = 0; j < opt.n_two; ++j) {
    Realization& r = res.two[j];
    r.atoms = 2;
    r.sites = {sites[opt.n_one + 2 * j], sites[opt.n_one + 2 * j + 1]};
    r.params = tip::realize_parameters(r.sites, opt.tip, cal);
    r.seed = derive_seed(opt.seed, StreamTag::atom_pair, static_cast<std::uint64_t>(j));
  }

  const std::size_t total = res.one.size() + res.two.size();
  parallel_for(total, opt.threads, [&](std::size_t k) {
    Realization& r = k < res.one.size() ? res.one[k] : res.two[k - res.one.size()];
    SimConfig cfg;
    cfg.dt = opt.dt;
    cfg.duration = opt.duration;
    cfg.seed = r.seed;
    cfg.initial_state = ground_state(r.atoms);
    const Trajectory traj = qmc_trajectory(EmitterModel::build(r.params, r.atoms), cfg);
    r.g2 = estimate_or_empty(std::span<const Trajectory>(&traj, 1), opt.bin_width, opt.tau_max);
    r.rate = traj.emission_rate();
    r.max_jump_probability = traj.max_jump_probability;
  });

  auto estimates = [](const std::vector<Realization>& rs) {
    std::vector<CorrelationEstimate> out;
    for (const auto& r : rs) out.push_back(r.g2);
    return out;
  };
  const auto e1 = estimates(res.one);
  const auto e2 = estimates(res.two);
  auto all = e1;
  all.insert(all.end(), e2.begin(), e2.end());
  res.average_one = rate_weighted_average(e1);
  res.rate_one = res.average_one.mean_rate;
  if (!e2.empty()) {
    res.average_two = rate_weighted_average(e2);
    res.rate_two = res.average_two.mean_rate;
  }
  res.average_mix = rate_weighted_average(all);
  res.rate_mix = res.average_mix.mean_rate;
  res.brightness = res.rate_one > 0.0 ? res.rate_mix / res.rate_one : 0.0;
  return res;
}

}  // namespace nanoqmc
