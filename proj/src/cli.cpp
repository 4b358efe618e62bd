#include "nanoqmc/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "nanoqmc/dynamics.hpp"
#include "nanoqmc/errors.hpp"
#include "nanoqmc/experiments.hpp"
#include "nanoqmc/nanotip.hpp"
#include "nanoqmc/photon_stats.hpp"
#include "nanoqmc/run_config.hpp"

namespace nanoqmc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Session {
  std::string command;
  RunConfig cfg;
  std::uint64_t seed = 1;
  int threads = 1;
  fs::path out_dir = ".";
  std::ostream* log = nullptr;
  std::map<std::string, std::string> digests;
  json derived_seeds = json::object();
  json notes = json::object();

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(out_dir);
    const fs::path path = out_dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write output file '" + path.string() + "'");
    f << content;
    digests[name] = sha256_hex(content);
    *log << "wrote " << path.string() << "\n";
  }

  void warn_jump_probability(double p) const {
    if (p > kJumpProbabilityWarn) {
      *log << "warning: largest jump probability per step " << p << " exceeds " << kJumpProbabilityWarn
           << "; consider a smaller dt\n";
    }
  }
};

// Keys shared by the g2 and sweep commands.
const std::set<std::string> kMixtureKeys = {"seed", "omega", "delta", "gamma", "dt", "duration_one", "mu",
                                            "segments", "bin_width", "tau_max"};

MixtureOptions mixture_options(Session& s) {
  MixtureOptions o;
  RunConfig& c = s.cfg;
  o.omega = c.number("omega", 1.0);
  if (o.omega < 0.0) c.fail("omega", "must be non-negative");
  o.delta = c.number("delta", 0.0);
  o.gamma = c.number("gamma", 1.0);
  if (!(o.gamma > 0.0)) c.fail("gamma", "must be positive");
  o.dt = c.number("dt", 1e-3);
  if (!(o.dt > 0.0)) c.fail("dt", "must be positive");
  o.duration_one = c.number("duration_one", 2e5);
  if (!(o.duration_one > 0.0)) c.fail("duration_one", "must be positive");
  o.mu = c.number("mu", 1.0);
  if (!(o.mu > 0.0)) c.fail("mu", "must be positive");
  o.segments = static_cast<int>(c.integer("segments", 20));
  if (o.segments < 1) c.fail("segments", "must be >= 1");
  if (!(o.duration_one / o.segments >= o.dt) || !(o.duration_two() / o.segments >= o.dt)) {
    c.fail("segments", "each segment must span at least one time step");
  }
  o.bin_width = c.number("bin_width", 0.05);
  if (!(o.bin_width > 0.0)) c.fail("bin_width", "must be positive");
  o.tau_max = c.number("tau_max", 20.0);
  if (!(o.tau_max >= o.bin_width)) c.fail("tau_max", "must be >= bin_width");
  o.seed = s.seed;
  o.threads = s.threads;
  return o;
}

void check_pair_rates(RunConfig& c, double gamma, double gamma12, const std::string& key) {
  if (std::abs(gamma12) > gamma) {
    c.fail(key, "|gamma12| = " + num(std::abs(gamma12)) + " exceeds gamma = " + num(gamma));
  }
}

json seeds_json(const std::vector<std::uint64_t>& seeds) {
  json a = json::array();
  for (auto v : seeds) a.push_back(v);
  return a;
}

std::string trajectory_csv(std::span<const Trajectory> segments) {
  std::string out = "time,channel\n";
  double offset = 0.0;
  char line[64];
  for (const auto& t : segments) {
    for (const auto& p : t.photons) {
      std::snprintf(line, sizeof line, "%.12g,%d\n", offset + p.time, p.channel);
      out += line;
    }
    offset += t.duration;
  }
  return out;
}

void cmd_analytic(Session& s) {
  RunConfig& c = s.cfg;
  const double omega = c.number("omega", 1.0);
  if (!(omega > 0.0)) c.fail("omega", "must be positive");
  const auto deltas = c.list("delta12_list", {0.0, 2.0, 10.0});
  const double t_max = c.number("t_max", 20.0);
  if (!(t_max > 0.0)) c.fail("t_max", "must be positive");
  const double dt_out = c.number("dt_out", 0.01);
  if (!(dt_out > 0.0) || dt_out > t_max) c.fail("dt_out", "must satisfy 0 < dt_out <= t_max");

  const auto steps = static_cast<std::int64_t>(std::floor(t_max / dt_out + 1e-9));
  std::string csv = "delta12,t,Pee,Pprod\n";
  for (double d : deltas) {
    for (std::int64_t k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * dt_out;
      csv += num(d) + "," + num(t) + "," + num(analytic_pee(omega, d, t)) + "," +
             num(single_excitation_product(omega, d, t)) + "\n";
    }
  }
  s.write("analytic.csv", csv);
}

json point_summary(const MixturePoint& pt, const MixtureOptions& o) {
  json j;
  j["g2_zero"] = pt.mixture.g2_zero();
  j["g2_zero_sigma"] = pt.mixture.g2_zero_sigma();
  j["mean_rate"] = pt.rate_mix;
  j["brightness"] = pt.brightness;
  j["brightness_poisson"] = pt.brightness_poisson;
  j["total_photons"] = pt.mixture.total_photons;
  j["duration"] = pt.mixture.total_time;
  j["rate_one"] = pt.rate_one;
  j["rate_two"] = pt.rate_two;
  j["g2_zero_two_atom"] = pt.two_atom.g2_zero();
  j["duration_one"] = o.duration_one;
  j["duration_two"] = o.duration_two();
  j["delta12"] = pt.delta12;
  j["gamma12"] = pt.gamma12;
  return j;
}

void cmd_g2(Session& s) {
  RunConfig& c = s.cfg;
  const MixtureOptions o = mixture_options(s);
  const double delta12 = c.number("delta12", 0.0);
  const double gamma12 = c.number("gamma12", 0.0);
  check_pair_rates(c, o.gamma, gamma12, "gamma12");
  const bool export_traj = c.integer("export_trajectories", 0) != 0;

  *s.log << "simulating single-atom stream, T = " << o.duration_one << "\n";
  const SegmentedRun one = simulate_single_reference(o);
  *s.log << "simulating two-atom stream, T = " << o.duration_two() << "\n";
  const MixturePoint pt = run_mixture_point(o, one, delta12, gamma12);
  s.warn_jump_probability(pt.max_jump_probability);

  s.write("g2.csv", to_csv(pt.mixture));
  json summary = point_summary(pt, o);
  // Eq. (6)-style intensity weighting versus the number-fluctuation value for
  // independent emitters at the same mu (both untruncated).
  std::vector<double> rates, g2n;
  for (int n = 1; n <= 60; ++n) {
    rates.push_back(static_cast<double>(n));
    g2n.push_back(g2_zero_fixed_n(n));
  }
  summary["g2_zero_independent_intensity_weighted"] = mixture_g2_zero(MixtureSpec::poisson(o.mu, rates), g2n);
  summary["g2_zero_independent_number_fluctuation"] = number_fluctuation_g2_zero(o.mu, 60);
  s.write("g2_summary.json", summary.dump(2) + "\n");
  if (export_traj) {
    s.write("trajectory_one.csv", trajectory_csv(one.segments));
  }
  s.derived_seeds["single_atom"] = seeds_json(one.seeds);
  s.derived_seeds["atom_pair"] = seeds_json(pt.seeds_two);
  *s.log << "g2(0) = " << pt.mixture.g2_zero() << " +- " << pt.mixture.g2_zero_sigma()
         << ", brightness = " << pt.brightness << "\n";
}

void cmd_sweep(Session& s) {
  RunConfig& c = s.cfg;
  const MixtureOptions o = mixture_options(s);
  const auto deltas = c.list("delta12_list", {0.0, 1.0, 2.0, 5.0, 10.0});
  const auto gammas = c.list("gamma12_list", {0.0});
  for (double g : gammas) check_pair_rates(c, o.gamma, g, "gamma12_list");

  const SegmentedRun one = simulate_single_reference(o);
  std::string csv = "delta12,gamma12,g2_zero,brightness\n";
  json rows = json::array();
  for (double d : deltas) {
    for (double g : gammas) {
      *s.log << "sweep point delta12 = " << d << ", gamma12 = " << g << "\n";
      const MixturePoint pt = run_mixture_point(o, one, d, g);
      s.warn_jump_probability(pt.max_jump_probability);
      csv += num(d) + "," + num(g) + "," + num(pt.mixture.g2_zero()) + "," + num(pt.brightness) + "\n";
      rows.push_back(point_summary(pt, o));
      if (rows.size() == 1) s.derived_seeds["atom_pair"] = seeds_json(pt.seeds_two);
    }
  }
  s.derived_seeds["single_atom"] = seeds_json(one.seeds);
  s.write("sweep.csv", csv);
  s.write("sweep_summary.json", json{{"points", rows}}.dump(2) + "\n");
}

tip::TipGeometry tip_geometry(RunConfig& c) {
  tip::TipGeometry t;
  t.r_tip = c.number("r_tip", 100.0);
  if (!(t.r_tip > 0.0)) c.fail("r_tip", "must be positive");
  t.epsilon = c.number("epsilon", 2.1);
  if (!(t.epsilon > 0.0)) c.fail("epsilon", "must be positive (lossless dielectric)");
  const double wavelength = c.number("wavelength", 780.0);
  if (!(wavelength > 0.0)) c.fail("wavelength", "must be positive");
  t.k0 = 2.0 * std::numbers::pi / wavelength;
  if (!(t.size_parameter() < tip::kMaxSizeParameter)) {
    c.fail("r_tip", "k0*r_tip = " + num(t.size_parameter()) + " must stay below " + num(tip::kMaxSizeParameter));
  }
  t.validate();
  return t;
}

std::vector<double> linspace(double lo, double hi, std::int64_t n) {
  std::vector<double> v;
  for (std::int64_t i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(n - 1));
  return v;
}

void cmd_tip_map(Session& s) {
  RunConfig& c = s.cfg;
  const tip::TipGeometry t = tip_geometry(c);
  const std::string g = c.text("geometry", "A");
  if (g != "A" && g != "B") c.fail("geometry", "must be A or B");
  const double r_min = c.number("r_min", t.r_tip);
  const double r_max = c.number("r_max", 3.0 * t.r_tip);
  if (!(r_min >= t.r_tip)) c.fail("r_min", "must be >= r_tip");
  if (!(r_max >= r_min)) c.fail("r_max", "must be >= r_min");
  const auto r_steps = c.integer("r_steps", 41);
  if (r_steps < 1) c.fail("r_steps", "must be >= 1");
  const double th_min = c.number("theta_min", 0.0);
  const double th_max = c.number("theta_max", 180.0);
  if (!(th_min >= 0.0 && th_max <= 180.0 && th_min <= th_max)) c.fail("theta_max", "need 0 <= theta_min <= theta_max <= 180");
  const auto th_steps = c.integer("theta_steps", 37);
  if (th_steps < 1) c.fail("theta_steps", "must be >= 1");
  const double r12 = c.number("r12", 50.0);
  if (!(r12 > 0.0)) c.fail("r12", "must be positive");
  if (t.size_warning()) *s.log << "warning: k0*r_tip = " << t.size_parameter() << " > " << tip::kWarnSizeParameter << "\n";

  const auto rs = linspace(r_min, r_max, r_steps);
  auto ths = linspace(th_min, th_max, th_steps);
  for (double& th : ths) th *= kDeg;
  const auto map = tip::parameter_map(t, g == "A" ? tip::PairGeometry::A : tip::PairGeometry::B, rs, ths, r12);
  std::string csv = "r_nm,theta_deg,gamma12_over_gamma0,delta12_over_gamma0,valid\n";
  for (const auto& pt : map) {
    csv += num(pt.r) + "," + num(pt.theta / kDeg) + "," + num(pt.gamma12) + "," + num(pt.delta12) + "," +
           (pt.valid ? "1" : "0") + "\n";
  }
  s.write("tip_map.csv", csv);
}

void cmd_tip_experiment(Session& s) {
  RunConfig& c = s.cfg;
  TipExperimentOptions o;
  o.tip = tip_geometry(c);
  o.r_inner = c.number("r_inner", o.tip.r_tip);
  if (!(o.r_inner >= o.tip.r_tip)) c.fail("r_inner", "must be >= r_tip");
  o.r_outer = c.number("r_outer", 2.0 * o.tip.r_tip);
  if (!(o.r_outer > o.r_inner)) c.fail("r_outer", "must exceed r_inner");
  o.reference = {c.number("reference_r", o.tip.r_tip), c.number("reference_theta", 90.0) * kDeg,
                 c.number("reference_phi", 90.0) * kDeg};
  if (!(o.reference.r >= o.tip.r_tip)) c.fail("reference_r", "must be >= r_tip");
  o.rabi_at_reference = c.number("rabi_reference", 1.0);
  if (!(o.rabi_at_reference > 0.0)) c.fail("rabi_reference", "must be positive");
  o.n_one = static_cast<int>(c.integer("n_one", 100));
  if (o.n_one < 1) c.fail("n_one", "must be >= 1");
  o.n_two = static_cast<int>(c.integer("n_two", 50));
  if (o.n_two < 0) c.fail("n_two", "must be >= 0");
  o.duration = c.number("duration", 1e5);
  o.dt = c.number("dt", 1e-3);
  if (!(o.dt > 0.0)) c.fail("dt", "must be positive");
  if (!(o.duration >= o.dt)) c.fail("duration", "must be >= dt");
  o.bin_width = c.number("bin_width", 0.05);
  if (!(o.bin_width > 0.0)) c.fail("bin_width", "must be positive");
  o.tau_max = c.number("tau_max", 20.0);
  if (!(o.tau_max >= o.bin_width)) c.fail("tau_max", "must be >= bin_width");
  o.seed = s.seed;
  o.threads = s.threads;
  if (o.tip.size_warning()) {
    *s.log << "warning: k0*r_tip = " << o.tip.size_parameter() << " > " << tip::kWarnSizeParameter << "\n";
  }

  *s.log << "running " << o.n_one << " one-atom and " << o.n_two << " two-atom realizations, T = " << o.duration
         << "\n";
  const TipExperimentResult r = run_tip_experiment(o);

  double max_p = 0.0;
  std::vector<std::uint64_t> seeds_one, seeds_two;
  for (const auto& x : r.one) {
    max_p = std::max(max_p, x.max_jump_probability);
    seeds_one.push_back(x.seed);
  }
  for (const auto& x : r.two) {
    max_p = std::max(max_p, x.max_jump_probability);
    seeds_two.push_back(x.seed);
  }
  s.warn_jump_probability(max_p);

  const bool has_two = !r.two.empty();
  std::string csv = "tau,g2_one,g2_two,g2_mix,sigma_one,sigma_two,sigma_mix\n";
  for (std::size_t k = 0; k < r.average_mix.tau_bins.size(); ++k) {
    csv += num(r.average_mix.tau_bins[k]) + "," + num(r.average_one.g2_values[k]) + "," +
           num(has_two ? r.average_two.g2_values[k] : 0.0) + "," + num(r.average_mix.g2_values[k]) + "," +
           num(r.average_one.sigma[k]) + "," + num(has_two ? r.average_two.sigma[k] : 0.0) + "," +
           num(r.average_mix.sigma[k]) + "\n";
  }
  s.write("tip_experiment.csv", csv);

  std::string sites = "x_nm,y_nm,z_nm\n";
  std::string real = "index,atoms,omega1,omega2,gamma1,gamma2,gamma12,delta12,rate,g2_zero\n";
  int index = 0;
  for (const auto* set : {&r.one, &r.two}) {
    for (const auto& x : *set) {
      for (const auto& site : x.sites) {
        const auto p = site.cartesian();
        sites += num(p.x()) + "," + num(p.y()) + "," + num(p.z()) + "\n";
      }
      const auto& q = x.params;
      real += std::to_string(index++) + "," + std::to_string(x.atoms) + "," + num(q.omega1) + "," + num(q.omega2) +
              "," + num(q.gamma1) + "," + num(q.gamma2) + "," + num(q.gamma12) + "," + num(q.delta12) + "," +
              num(x.rate) + "," + num(x.g2.g2_zero()) + "\n";
    }
  }
  s.write("tip_sites.csv", sites);
  s.write("tip_realizations.csv", real);

  const double half_shell_nm3 = 0.5 * tip::shell_volume(o.r_inner, o.r_outer);
  json j;
  j["R_1A"] = r.rate_one;
  j["R_2A"] = r.rate_two;
  j["R_mix"] = r.rate_mix;
  j["brightness"] = r.brightness;
  j["g2_zero_one"] = r.average_one.g2_zero();
  j["g2_zero_two"] = has_two ? r.average_two.g2_zero() : 0.0;
  j["g2_zero_mix"] = r.average_mix.g2_zero();
  j["g2_zero_mix_sigma"] = r.average_mix.g2_zero_sigma();
  j["n_one"] = o.n_one;
  j["n_two"] = o.n_two;
  j["k0_r_tip"] = o.tip.size_parameter();
  // The sampled region is the forward half shell; the full-shell volume is
  // listed alongside because quoted densities are often based on it.
  j["sampling_volume_half_shell_cm3"] = half_shell_nm3 * 1e-21;
  j["full_shell_volume_cm3"] = 2.0 * half_shell_nm3 * 1e-21;
  j["density_for_mu1_half_shell_cm3"] = 1.0 / (half_shell_nm3 * 1e-21);
  s.write("tip_experiment.json", j.dump(2) + "\n");
  s.derived_seeds["single_atom"] = seeds_json(seeds_one);
  s.derived_seeds["atom_pair"] = seeds_json(seeds_two);
  s.derived_seeds["site_sampling"] = derive_seed(o.seed, StreamTag::site_sampling, 0);
  *s.log << "R_1A = " << r.rate_one << ", R_2A = " << r.rate_two << ", R_mix = " << r.rate_mix
         << ", B = " << r.brightness << ", g2_mix(0) = " << r.average_mix.g2_zero() << "\n";
}

struct Command {
  const char* name;
  const char* help;
  std::set<std::string> keys;
  void (*run)(Session&);
};

std::set<std::string> with_mixture(std::set<std::string> extra) {
  extra.insert(kMixtureKeys.begin(), kMixtureKeys.end());
  return extra;
}

const std::set<std::string> kTipKeys = {"seed", "r_tip", "epsilon", "wavelength"};

std::set<std::string> with_tip(std::set<std::string> extra) {
  extra.insert(kTipKeys.begin(), kTipKeys.end());
  return extra;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> cmds = {
      {"analytic", "two-atom doubly excited population versus time (no decay)",
       {"seed", "omega", "delta12_list", "t_max", "dt_out"}, cmd_analytic},
      {"g2", "g2(tau) of a mu-weighted one/two-atom mixture from quantum-jump trajectories",
       with_mixture({"delta12", "gamma12", "export_trajectories"}), cmd_g2},
      {"sweep", "g2(0) and brightness over a delta12 x gamma12 grid",
       with_mixture({"delta12_list", "gamma12_list"}), cmd_sweep},
      {"tip-map", "gamma12 and delta12 maps for two atoms at fixed separation near the tip",
       with_tip({"geometry", "r_min", "r_max", "r_steps", "theta_min", "theta_max", "theta_steps", "r12"}),
       cmd_tip_map},
      {"tip-experiment", "position-averaged g2 for random one- and two-atom placements at the tip",
       with_tip({"r_inner", "r_outer", "reference_r", "reference_theta", "reference_phi", "rabi_reference", "n_one",
                 "n_two", "duration", "dt", "bin_width", "tau_max"}),
       cmd_tip_experiment},
  };
  return cmds;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& log) {
  CLI::App app{"Photon statistics of one- and two-atom emitter ensembles"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--seed", seed, "master seed (overrides the 'seed' key)");
  app.add_option("--threads", threads, "worker threads for trajectory ensembles")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", overrides, "override a configuration key: --set key=value");

  std::map<CLI::App*, const Command*> by_app;
  for (const auto& cmd : commands()) by_app[app.add_subcommand(cmd.name, cmd.help)->fallthrough()] = &cmd;

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    const Command* cmd = nullptr;
    for (auto* sub : app.get_subcommands()) cmd = by_app.at(sub);

    Session s;
    s.command = cmd->name;
    s.log = &log;
    s.threads = threads;
    s.out_dir = out_dir;
    if (!config_path.empty()) s.cfg = RunConfig::load(config_path);
    for (const auto& o : overrides) s.cfg.set_override(o);
    s.cfg.restrict_to(cmd->keys, cmd->name);
    s.seed = s.cfg.unsigned_integer("seed", 1);
    if (seed) s.seed = *seed;

    cmd->run(s);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest;
    manifest["tool"] = "nanoqmc";
    manifest["version"] = kToolVersion;
    manifest["command"] = s.command;
    json config = json::object();
    for (const auto& [k, v] : s.cfg.resolved()) config[k] = v;
    config["seed"] = std::to_string(s.seed);
    manifest["config"] = config;
    manifest["master_seed"] = s.seed;
    manifest["threads"] = s.threads;
    manifest["derived_seeds"] = s.derived_seeds;
    manifest["wall_time_seconds"] = wall;
    json outputs = json::object();
    for (const auto& [name, digest] : s.digests) outputs[name] = "sha256:" + digest;
    manifest["outputs"] = outputs;
    s.write("manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvariantError& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace nanoqmc
