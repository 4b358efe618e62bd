#include <cmath>
#include <sstream>

#include "nanoqmc/dynamics.hpp"
#include "nanoqmc/errors.hpp"

namespace nanoqmc {

DensityMatrix DensityMatrix::pure(const StateVector& psi) { return {psi * psi.adjoint()}; }

double DensityMatrix::hermiticity_defect() const {
  return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const OperatorMatrix herm = 0.5 * (entries + entries.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate() const {
  std::ostringstream os;
  if (entries.rows() != entries.cols() || (entries.rows() != 2 && entries.rows() != 4)) {
    os << "density matrix must be 2x2 or 4x4";
  } else if (!entries.allFinite()) {
    os << "density matrix has non-finite entries";
  } else if (hermiticity_defect() > 1e-10) {
    os << "density matrix Hermiticity defect " << hermiticity_defect();
  } else if (std::abs(trace() - 1.0) > 1e-8) {
    os << "density matrix trace " << trace() << " deviates from 1";
  } else if (min_eigenvalue() < -1e-8) {
    os << "density matrix eigenvalue " << min_eigenvalue() << " below -1e-8";
  } else {
    return;
  }
  throw InvariantError(os.str());
}

namespace {

// drho/dt = -i[H, rho] - sum_ij gamma_ij (1/2 {S_i^+ S_j^-, rho} - S_j^- rho S_i^+)
template <int N>
class Liouvillian {
 public:
  using Mat = Eigen::Matrix<Complex, N, N>;

  Liouvillian(const PhysicalParams& p) {
    constexpr int atoms = N == 2 ? 1 : 2;
    if constexpr (atoms == 1) {
      h_ = build_single_hamiltonian(p.omega1, p.delta);
      s_[0] = lowering();
      gamma_ << p.gamma1, 0.0, 0.0, 0.0;
    } else {
      h_ = build_pair_hamiltonian(p);
      s_[0] = lowering(1);
      s_[1] = lowering(2);
      gamma_ << p.gamma1, p.gamma12, p.gamma12, p.gamma2;
    }
    k_.setZero();
    for (int i = 0; i < atoms; ++i) {
      for (int j = 0; j < atoms; ++j) k_ += gamma_(i, j) * s_[i].adjoint() * s_[j];
    }
    scale_ = 2.0 * h_.cwiseAbs().rowwise().sum().maxCoeff() + k_.cwiseAbs().rowwise().sum().maxCoeff();
  }

  Mat apply(const Mat& rho) const {
    Mat out = Complex(0.0, -1.0) * (h_ * rho - rho * h_) - 0.5 * (k_ * rho + rho * k_);
    out += jump(rho);
    return out;
  }

  // sum_ij gamma_ij S_j^- rho S_i^+
  Mat jump(const Mat& rho) const {
    Mat out = Mat::Zero();
    constexpr int atoms = N == 2 ? 1 : 2;
    for (int i = 0; i < atoms; ++i) {
      for (int j = 0; j < atoms; ++j) {
        if (gamma_(i, j) != 0.0) out += gamma_(i, j) * s_[j] * rho * s_[i].adjoint();
      }
    }
    return out;
  }

  void rk4(Mat& rho, double h) const {
    const Mat k1 = apply(rho);
    const Mat k2 = apply(rho + 0.5 * h * k1);
    const Mat k3 = apply(rho + 0.5 * h * k2);
    const Mat k4 = apply(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // Upper bound on the generator norm; keeps RK4 well inside its stability region.
  double stable_step(double requested) const {
    return scale_ > 0.0 ? std::min(requested, 0.5 / scale_) : requested;
  }

  const Mat& decay_operator() const { return k_; }

 private:
  Mat h_;
  Mat k_;
  std::array<Mat, 2> s_{};
  Eigen::Matrix2d gamma_;
  double scale_ = 0.0;
};

template <int N>
std::vector<DensitySample> integrate(const DensityMatrix& rho0, const PhysicalParams& p, double dt,
                                     double t_end, int stride) {
  using Mat = typename Liouvillian<N>::Mat;
  const Liouvillian<N> gen(p);
  const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
  const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
  Mat rho = rho0.entries;
  std::vector<DensitySample> out;
  out.push_back({0.0, rho0});
  for (std::int64_t k = 1; k <= steps; ++k) {
    gen.rk4(rho, h);
    if (k % stride == 0 || k == steps) {
      DensityMatrix d{rho};
      d.validate();
      out.push_back({static_cast<double>(k) * h, std::move(d)});
    }
  }
  return out;
}

constexpr double kSteadyTolerance = 1e-10;
constexpr double kSteadyTimeCap = 1e3;
constexpr double kRegressionStep = 2e-3;

template <int N>
typename Liouvillian<N>::Mat relax(const Liouvillian<N>& gen) {
  using Mat = typename Liouvillian<N>::Mat;
  Mat rho = Mat::Zero();
  rho(0, 0) = 1.0;
  const double h = gen.stable_step(1e-2);
  double t = 0.0;
  while (t < kSteadyTimeCap) {
    for (int k = 0; k < 100; ++k) gen.rk4(rho, h);
    t += 100 * h;
    if (gen.apply(rho).cwiseAbs().maxCoeff() < kSteadyTolerance) return rho;
  }
  std::ostringstream os;
  os << "steady state not reached within t = " << kSteadyTimeCap;
  throw InvariantError(os.str());
}

template <int N>
std::vector<double> regression(const PhysicalParams& p, std::span<const double> taus) {
  using Mat = typename Liouvillian<N>::Mat;
  const Liouvillian<N> gen(p);
  const Mat rho_ss = relax(gen);
  const Mat& k = gen.decay_operator();
  const double rate = (k * rho_ss).trace().real();
  if (!(rate > 0.0)) throw InvariantError("steady state emits no photons; g2 undefined");

  Mat sigma = gen.jump(rho_ss);
  const double h = gen.stable_step(kRegressionStep);
  double tau = 0.0;
  std::vector<double> out;
  out.reserve(taus.size());
  for (double target : taus) {
    if (!(target >= tau)) throw ConfigError("tau grid must be non-negative and sorted");
    const auto n = static_cast<std::int64_t>(std::ceil((target - tau) / h - 1e-9));
    if (n > 0) {
      const double sub = (target - tau) / static_cast<double>(n);
      for (std::int64_t i = 0; i < n; ++i) gen.rk4(sigma, sub);
    }
    tau = target;
    out.push_back((k * sigma).trace().real() / (rate * rate));
  }
  return out;
}

int atoms_of(int dim) {
  if (dim == 2) return 1;
  if (dim == 4) return 2;
  throw ConfigError("density matrix must be 2x2 or 4x4");
}

}  // namespace

std::vector<DensitySample> lindblad_integrate(const DensityMatrix& rho0, const PhysicalParams& p,
                                              double dt, double t_end, int output_stride) {
  const int atoms = atoms_of(rho0.dimension());
  if (atoms == 2) p.validate();
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw ConfigError("dt must be positive and t_end non-negative");
  if (output_stride < 1) throw ConfigError("output stride must be >= 1");
  rho0.validate();
  if (atoms == 1) return integrate<2>(rho0, p, dt, t_end, output_stride);
  return integrate<4>(rho0, p, dt, t_end, output_stride);
}

DensityMatrix steady_state(const PhysicalParams& p, int atoms) {
  if (atoms == 1) return {relax(Liouvillian<2>(p))};
  if (atoms == 2) {
    p.validate();
    return {relax(Liouvillian<4>(p))};
  }
  throw ConfigError("atom number must be 1 or 2");
}

std::vector<double> g2_regression(const PhysicalParams& p, int atoms,
                                  std::span<const double> tau_grid) {
  if (atoms == 1) {
    if (!(p.gamma1 > 0.0)) throw ConfigError("g2 regression needs a positive decay rate");
    return regression<2>(p, tau_grid);
  }
  if (atoms == 2) {
    p.validate();
    if (!(p.gamma1 > 0.0 || p.gamma2 > 0.0)) throw ConfigError("g2 regression needs a positive decay rate");
    return regression<4>(p, tau_grid);
  }
  throw ConfigError("atom number must be 1 or 2");
}

}  // namespace nanoqmc
