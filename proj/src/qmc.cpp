#include <cmath>
#include <random>
#include <sstream>
#include <type_traits>

#include "nanoqmc/dynamics.hpp"
#include "nanoqmc/errors.hpp"
#include "nanoqmc/rng.hpp"

namespace nanoqmc {

EmitterModel EmitterModel::build(const PhysicalParams& p, int atoms) {
  if (atoms != 1 && atoms != 2) throw ConfigError("atom number must be 1 or 2");
  EmitterModel m;
  m.atoms = atoms;
  m.params = p;
  if (atoms == 1) {
    if (!std::isfinite(p.omega1) || !std::isfinite(p.delta) || !std::isfinite(p.gamma1) ||
        p.gamma1 < 0.0) {
      throw ConfigError("single-atom parameters must be finite with gamma1 >= 0");
    }
    m.hamiltonian = build_single_hamiltonian(p.omega1, p.delta);
    m.jumps.push_back(std::sqrt(p.gamma1) * lowering());
  } else {
    p.validate();
    m.hamiltonian = build_pair_hamiltonian(p);
    const JumpBasis b = decompose({p.gamma1, p.gamma2, p.gamma12});
    m.jumps.push_back(b.l1);
    m.jumps.push_back(b.l2);
  }
  return m;
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(duration >= dt) || !std::isfinite(duration)) throw ConfigError("duration must be >= dt");
  const auto n = initial_state.size();
  if (n != 2 && n != 4) throw ConfigError("initial state must have dimension 2 or 4");
  if (std::abs(initial_state.norm() - 1.0) > 1e-12) throw ConfigError("initial state must be normalized");
}

namespace {

// Hot loop of the jump/no-jump scheme on plain arrays; N is 2 or 4.
template <int N>
class JumpStepper {
 public:
  static constexpr int kDim = N;

  JumpStepper(const EmitterModel& m, double dt) : dt_(dt), channels_(static_cast<int>(m.jumps.size())) {
    const OperatorMatrix u = matrix_exponential(build_effective_hamiltonian(m.hamiltonian, m.jumps), dt);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        ur_[i][j] = u(i, j).real();
        ui_[i][j] = u(i, j).imag();
      }
    }
    for (int c = 0; c < channels_; ++c) {
      const OperatorMatrix& l = m.jumps[c];
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
          if (l(i, j) != Complex(0.0, 0.0)) {
            jumps_[c].push({i, j, l(i, j).real(), l(i, j).imag()});
          }
        }
      }
    }
  }

  void load(const StateVector& psi) {
    for (int i = 0; i < N; ++i) {
      re_[i] = psi(i).real();
      im_[i] = psi(i).imag();
    }
  }

  double population(int i) const { return re_[i] * re_[i] + im_[i] * im_[i]; }

  // Returns 0 for no jump, otherwise the channel label. `total` receives p1 + p2.
  int step(double r, double& total) {
    double p[2] = {0.0, 0.0};
    for (int c = 0; c < channels_; ++c) {
      for (int i = 0; i < N; ++i) {
        lr_[c][i] = 0.0;
        li_[c][i] = 0.0;
      }
      const Sparse& s = jumps_[c];
      for (int k = 0; k < s.size; ++k) {
        const Entry& e = s.entries[k];
        lr_[c][e.row] += e.re * re_[e.col] - e.im * im_[e.col];
        li_[c][e.row] += e.re * im_[e.col] + e.im * re_[e.col];
      }
      double n2 = 0.0;
      for (int i = 0; i < N; ++i) n2 += lr_[c][i] * lr_[c][i] + li_[c][i] * li_[c][i];
      p[c] = n2 * dt_;
    }
    total = p[0] + p[1];
    const double p0 = 1.0 - total;
    if (r < p0) {
      double nr[N], ni[N];
      for (int i = 0; i < N; ++i) {
        double a = 0.0, b = 0.0;
        for (int j = 0; j < N; ++j) {
          a += ur_[i][j] * re_[j] - ui_[i][j] * im_[j];
          b += ur_[i][j] * im_[j] + ui_[i][j] * re_[j];
        }
        nr[i] = a;
        ni[i] = b;
      }
      assign_normalized(nr, ni);
      return 0;
    }
    int c = (r < p0 + p[0]) ? 0 : 1;
    if (c >= channels_ || p[c] <= 0.0) c = (p[0] > 0.0) ? 0 : 1;
    assign_normalized(lr_[c], li_[c]);
    return c + 1;
  }

 private:
  struct Entry {
    int row, col;
    double re, im;
  };
  struct Sparse {
    std::array<Entry, N * N> entries{};
    int size = 0;
    void push(Entry e) { entries[size++] = e; }
  };

  void assign_normalized(const double* r, const double* i) {
    double n2 = 0.0;
    for (int k = 0; k < N; ++k) n2 += r[k] * r[k] + i[k] * i[k];
    const double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < N; ++k) {
      re_[k] = r[k] * inv;
      im_[k] = i[k] * inv;
    }
  }

  double dt_;
  int channels_;
  double ur_[N][N]{}, ui_[N][N]{};
  std::array<Sparse, 2> jumps_{};
  double re_[N]{}, im_[N]{};
  double lr_[2][N]{}, li_[2][N]{};
};

std::int64_t step_count(const SimConfig& cfg) {
  return static_cast<std::int64_t>(std::floor(cfg.duration / cfg.dt + 1e-9));
}

template <int N, class Observer>
Trajectory run(const EmitterModel& model, const SimConfig& cfg, Observer&& observe) {
  JumpStepper<N> stepper(model, cfg.dt);
  stepper.load(cfg.initial_state);
  std::mt19937_64 engine(cfg.seed);

  const std::int64_t steps = step_count(cfg);
  Trajectory traj;
  traj.duration = static_cast<double>(steps) * cfg.dt;
  double total = 0.0;
  for (std::int64_t k = 0; k < steps; ++k) {
    observe(k, stepper);
    const int channel = stepper.step(uniform01(engine), total);
    if (total > traj.max_jump_probability) {
      traj.max_jump_probability = total;
      if (total > kJumpProbabilityLimit) {
        std::ostringstream os;
        os << "jump probability per step reached " << total << " (limit " << kJumpProbabilityLimit
           << "); reduce dt";
        throw InvariantError(os.str());
      }
    }
    if (channel != 0) traj.photons.push_back({static_cast<double>(k) * cfg.dt, channel});
  }
  observe(steps, stepper);
  return traj;
}

struct NoObserver {
  template <class S>
  void operator()(std::int64_t, const S&) const {}
};

void check_compatible(const EmitterModel& model, const SimConfig& cfg) {
  cfg.validate();
  if (cfg.initial_state.size() != model.dimension()) {
    throw ConfigError("initial state dimension does not match the atom number");
  }
}

}  // namespace

Trajectory qmc_trajectory(const EmitterModel& model, const SimConfig& cfg) {
  check_compatible(model, cfg);
  if (model.atoms == 1) return run<2>(model, cfg, NoObserver{});
  return run<4>(model, cfg, NoObserver{});
}

Trajectory qmc_trajectory(const PhysicalParams& p, const SimConfig& cfg) {
  cfg.validate();
  return qmc_trajectory(EmitterModel::build(p, cfg.initial_state.size() == 2 ? 1 : 2), cfg);
}

std::vector<std::array<double, 2>> sample_excitations(const EmitterModel& model,
                                                      const SimConfig& cfg, int stride) {
  check_compatible(model, cfg);
  if (stride < 1) throw ConfigError("sampling stride must be >= 1");
  std::vector<std::array<double, 2>> out;
  auto observe = [&](std::int64_t k, const auto& s) {
    if (k % stride != 0) return;
    if constexpr (std::remove_cvref_t<decltype(s)>::kDim == 2) {
      out.push_back({s.population(basis::e), 0.0});
    } else {
      out.push_back({s.population(basis::eg) + s.population(basis::ee),
                     s.population(basis::ge) + s.population(basis::ee)});
    }
  };
  if (model.atoms == 1) {
    run<2>(model, cfg, observe);
  } else {
    run<4>(model, cfg, observe);
  }
  return out;
}

}  // namespace nanoqmc
