#pragma once

// Two-photon polarization tomography: forward model, synthetic data,
// linear inversion, maximum-likelihood reconstruction and state metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "spdctomo/bfgs.hpp"
#include "spdctomo/polarization_optics.hpp"
#include "spdctomo/states.hpp"

namespace spdctomo {

struct TomographyRecord {
  AnalyzerSetting angular;
  AnalyzerSetting frequency;
  double counts = 0.0;  // integral for measured/simulated data
  double time_s = 1.0;
};

struct TomographyDataset {
  std::vector<TomographyRecord> records;
  double background_rate = 0.0;  // counts/s, added to the model

  static constexpr double kAngleTol = 1e-9;

  void validate() const {
    if (records.size() != 16) {
      throw std::invalid_argument("dataset: expected 16 records, got " +
                                  std::to_string(records.size()));
    }
    if (!(background_rate >= 0.0) || !std::isfinite(background_rate)) {
      throw std::invalid_argument("dataset: background rate must be >= 0");
    }
    const auto table = j16_settings();
    auto same = [](const AnalyzerSetting& a, const AnalyzerSetting& b) {
      auto close = [](double x, double y) {
        const double d = std::abs(x - y);
        return d < kAngleTol || std::abs(d - kPi) < kAngleTol;
      };
      return close(a.qwp_angle(), b.qwp_angle()) && close(a.hwp_angle(), b.hwp_angle());
    };
    for (std::size_t i = 0; i < 16; ++i) {
      const auto& r = records[i];
      if (!same(r.angular, table[i].angular) || !same(r.frequency, table[i].frequency)) {
        throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                    " does not match J16 setting " + table[i].label);
      }
      if (!(r.counts >= 0.0) || !std::isfinite(r.counts)) {
        throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                    " has negative or non-finite counts");
      }
      if (!(r.time_s > 0.0) || !std::isfinite(r.time_s)) {
        throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                    " has non-positive acquisition time");
      }
    }
  }

  std::array<TwoPhotonProjector, 16> projectors() const {
    std::array<TwoPhotonProjector, 16> out;
    for (std::size_t i = 0; i < 16; ++i) {
      out[i] = two_photon_projector(records[i].angular, records[i].frequency);
    }
    return out;
  }

  double total_counts() const {
    return std::accumulate(records.begin(), records.end(), 0.0,
                           [](double s, const TomographyRecord& r) { return s + r.counts; });
  }
};

// ---------------------------------------------------------------------------
// Forward model

inline double projection_probability(const Matrix4c& rho, const TwoPhotonProjector& p) {
  return (p.ket.adjoint() * rho * p.ket)(0).real();
}

inline double expected_rate(const DensityMatrix& rho, const TwoPhotonProjector& proj,
                            double n0, double background = 0.0) {
  if (!rho.is_physical()) {
    throw std::invalid_argument("expected_rate: density matrix is not physical");
  }
  if (!(n0 > 0.0)) throw std::invalid_argument("expected_rate: n0 must be > 0");
  const double p = std::clamp(projection_probability(rho.matrix(), proj), 0.0, 1.0);
  return n0 * p + background;
}

// Noiseless dataset: counts equal expected_rate * time (not rounded).
inline TomographyDataset expected_dataset(const DensityMatrix& rho, double n0,
                                          double acquisition_time, double background = 0.0) {
  if (!(acquisition_time > 0.0)) {
    throw std::invalid_argument("acquisition time must be > 0");
  }
  TomographyDataset d;
  d.background_rate = background;
  for (const auto& e : j16_settings()) {
    const double rate =
        expected_rate(rho, two_photon_projector(e.angular, e.frequency), n0, background);
    d.records.push_back({e.angular, e.frequency, rate * acquisition_time, acquisition_time});
  }
  return d;
}

// Poisson-distributed counts, reproducible for a fixed seed.
inline TomographyDataset simulate_counts(const DensityMatrix& rho, double n0,
                                         double acquisition_time, std::uint64_t seed,
                                         double background = 0.0) {
  TomographyDataset d = expected_dataset(rho, n0, acquisition_time, background);
  boost::random::mt19937_64 rng(seed);
  for (auto& r : d.records) {
    const double mean = r.counts;
    if (mean <= 0.0) {
      r.counts = 0.0;
      continue;
    }
    boost::random::poisson_distribution<std::int64_t, double> pois(mean);
    r.counts = static_cast<double>(pois(rng));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Linear inversion

// Basis of Hermitian 4x4 operators; a real vector x maps to sum_k x_k G_k.
// Order: 4 diagonal units, then for each pair j < k the symmetric and
// antisymmetric parts (rho_jk = x_sym + i x_anti).
inline std::array<Matrix4c, 16> hermitian_basis() {
  std::array<Matrix4c, 16> b;
  int idx = 0;
  for (int k = 0; k < 4; ++k) {
    b[idx] = Matrix4c::Zero();
    b[idx++](k, k) = 1.0;
  }
  for (int j = 0; j < 4; ++j) {
    for (int k = j + 1; k < 4; ++k) {
      b[idx] = Matrix4c::Zero();
      b[idx](j, k) = 1.0;
      b[idx++](k, j) = 1.0;
      b[idx] = Matrix4c::Zero();
      b[idx](j, k) = cplx(0.0, 1.0);
      b[idx++](k, j) = cplx(0.0, -1.0);
    }
  }
  return b;
}

using MeasurementMatrix = Eigen::Matrix<double, 16, 16>;

// Row i: <p_i| G_k |p_i> for every basis element k.
inline MeasurementMatrix measurement_matrix(std::span<const TwoPhotonProjector, 16> projectors) {
  const auto basis = hermitian_basis();
  MeasurementMatrix m;
  for (int i = 0; i < 16; ++i) {
    for (int k = 0; k < 16; ++k) m(i, k) = projection_probability(basis[k], projectors[i]);
  }
  return m;
}

// Solves the 16x16 system for the (unnormalized) operator reproducing the
// given rates, then Hermitizes and normalizes the trace.
inline DensityMatrix linear_inversion(std::span<const TwoPhotonProjector, 16> projectors,
                                      std::span<const double, 16> rates) {
  const MeasurementMatrix m = measurement_matrix(projectors);
  Eigen::FullPivLU<MeasurementMatrix> lu(m);
  lu.setThreshold(1e-10);
  if (lu.rank() < 16) {
    throw std::domain_error("linear_inversion: measurement matrix is singular (rank " +
                            std::to_string(lu.rank()) + ")");
  }
  Eigen::Matrix<double, 16, 1> r;
  for (int i = 0; i < 16; ++i) r(i) = rates[i];
  const Eigen::Matrix<double, 16, 1> x = lu.solve(r);
  const auto basis = hermitian_basis();
  Matrix4c rho = Matrix4c::Zero();
  for (int k = 0; k < 16; ++k) rho += x(k) * basis[k];
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) {
    throw std::domain_error("linear_inversion: reconstructed trace is not positive");
  }
  return DensityMatrix::raw(rho / tr);
}

inline DensityMatrix linear_inversion(const TomographyDataset& data) {
  data.validate();
  const auto proj = data.projectors();
  std::array<double, 16> rates;
  for (std::size_t i = 0; i < 16; ++i) {
    rates[i] = data.records[i].counts / data.records[i].time_s - data.background_rate;
  }
  return linear_inversion(std::span<const TwoPhotonProjector, 16>(proj),
                          std::span<const double, 16>(rates));
}

// ---------------------------------------------------------------------------
// Metrics

inline double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

// Eigenvalues in [-1e-6, 0) are set to zero and the trace renormalized;
// anything more negative is rejected.
inline Matrix4c clip_for_fidelity(const Matrix4c& m) {
  constexpr double kRejectBelow = -1e-6;
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (m + m.adjoint()));
  Eigen::Vector4d ev = es.eigenvalues();
  if (ev(0) < kRejectBelow) {
    throw std::invalid_argument("fidelity: eigenvalue " + std::to_string(ev(0)) +
                                " is too negative");
  }
  ev = ev.cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0.0)) throw std::invalid_argument("fidelity: zero matrix");
  ev /= tr;
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

inline double rank_tolerance(const Eigen::Vector4d& ev) {
  return 16.0 * std::numeric_limits<double>::epsilon() * ev.cwiseAbs().maxCoeff();
}

// Eigenvalues under the numerical-rank tolerance are treated as zero.
inline Matrix4c psd_sqrt(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(m);
  const double tol = rank_tolerance(es.eigenvalues());
  const Eigen::Vector4d s =
      es.eigenvalues().unaryExpr([tol](double x) { return x > tol ? std::sqrt(x) : 0.0; });
  return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

// F = (Tr sqrt(sqrt(rho_th) rho_exp sqrt(rho_th)))^2, evaluated as the squared
// nuclear norm of sqrt(rho_exp) sqrt(rho_th); singular values avoid taking
// square roots of round-off eigenvalues.
inline double fidelity(const DensityMatrix& rho_exp, const DensityMatrix& rho_th) {
  const Matrix4c a = clip_for_fidelity(rho_exp.matrix());
  const Matrix4c b = clip_for_fidelity(rho_th.matrix());
  const Eigen::JacobiSVD<Matrix4c> svd(psd_sqrt(a) * psd_sqrt(b));
  const double tr = svd.singularValues().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

inline double fidelity(const DensityMatrix& rho_exp, const PureState& psi) {
  return fidelity(rho_exp, DensityMatrix::from_pure(psi));
}

// Closest unit-trace PSD matrix in Frobenius norm (eigenvalue simplex
// projection).
inline DensityMatrix project_to_physical(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho.matrix());
  Eigen::Vector4d ev = es.eigenvalues();  // ascending
  std::array<double, 4> sorted = {ev(3), ev(2), ev(1), ev(0)};
  double cumulative = 0.0, shift = 0.0;
  for (int k = 0; k < 4; ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / (k + 1);
    if (sorted[k] - t > 0.0) shift = t;
  }
  for (int k = 0; k < 4; ++k) ev(k) = std::max(ev(k) - shift, 0.0);
  ev /= ev.sum();
  Matrix4c m = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  m /= m.trace().real();
  return DensityMatrix::physical(m);
}

// ---------------------------------------------------------------------------
// Likelihood

inline constexpr double kMinExpectedCounts = 1e-12;

// Poisson log-likelihood sum_i [n_i ln mu_i - mu_i] with mu_i = t_i (N a_i + bg),
// maximized over the intensity N >= 0.
inline double log_likelihood(const TomographyDataset& data, const DensityMatrix& rho) {
  const auto proj = data.projectors();
  std::array<double, 16> a;
  for (std::size_t i = 0; i < 16; ++i) {
    a[i] = std::max(projection_probability(rho.matrix(), proj[i]), 0.0);
  }
  const double bg = data.background_rate;
  auto ll = [&](double n_int) {
    double s = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      const auto& r = data.records[i];
      const double mu = std::max(r.time_s * (n_int * a[i] + bg), kMinExpectedCounts);
      s += r.counts * std::log(mu) - mu;
    }
    return s;
  };
  double ta = 0.0;
  for (std::size_t i = 0; i < 16; ++i) ta += data.records[i].time_s * a[i];
  if (bg == 0.0) return ll(data.total_counts() / ta);

  // d/dN is decreasing in N; bisect for its root on [0, hi].
  auto deriv = [&](double n_int) {
    double s = -ta;
    for (std::size_t i = 0; i < 16; ++i) {
      const double denom = std::max(n_int * a[i] + bg, kMinExpectedCounts);
      s += data.records[i].counts * a[i] / denom;
    }
    return s;
  };
  if (deriv(0.0) <= 0.0) return ll(0.0);
  double lo = 0.0, hi = std::max(1.0, data.total_counts() / ta);
  while (deriv(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? lo : hi) = mid;
  }
  return ll(0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Maximum likelihood

enum class LikelihoodModel { poisson, gaussian };

struct MleOptions {
  LikelihoodModel model = LikelihoodModel::poisson;
  int max_iterations = 10000;
  double gradient_tol = 1e-8;
  double init_eigen_floor = 1e-6;
};

struct ReconstructionMetrics {
  double purity = 0.0;
  std::optional<double> fidelity;
};

struct ReconstructionResult {
  DensityMatrix rho_raw;
  DensityMatrix rho_mle;
  double log_likelihood = 0.0;
  double intensity = 0.0;  // fitted n0, counts/s
  int iterations = 0;
  bool converged = false;
  ReconstructionMetrics metrics;
};

namespace detail {

// rho ~ T^dagger T with T lower triangular; 4 real diagonal entries and
// 6 complex sub-diagonal entries.
inline constexpr std::array<std::array<int, 2>, 6> kLowerPairs = {
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

inline Matrix4c t_from_params(const Eigen::VectorXd& x) {
  Matrix4c t = Matrix4c::Zero();
  for (int k = 0; k < 4; ++k) t(k, k) = x(k);
  for (int m = 0; m < 6; ++m) {
    t(kLowerPairs[m][0], kLowerPairs[m][1]) = cplx(x(4 + 2 * m), x(5 + 2 * m));
  }
  return t;
}

// Lower-triangular T with T^dagger T = a, for positive definite a.
inline Eigen::VectorXd params_from_matrix(const Matrix4c& a) {
  Eigen::PermutationMatrix<4> j;
  j.indices() << 3, 2, 1, 0;
  const Matrix4c flipped = j * a * j.transpose();
  Eigen::LLT<Matrix4c> llt(flipped);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("mle: initial matrix is not positive definite");
  }
  const Matrix4c l = llt.matrixL();
  const Matrix4c t = j * Matrix4c(l.adjoint()) * j.transpose();
  Eigen::VectorXd x(16);
  for (int k = 0; k < 4; ++k) x(k) = t(k, k).real();
  for (int m = 0; m < 6; ++m) {
    const cplx v = t(kLowerPairs[m][0], kLowerPairs[m][1]);
    x(4 + 2 * m) = v.real();
    x(5 + 2 * m) = v.imag();
  }
  return x;
}

// Gradient of a = <p| T^dagger T |p> = |T p|^2 with respect to x.
inline void accumulate_gradient(const Matrix4c& t, const Ket4& p, double coeff,
                                Eigen::VectorXd& grad) {
  const Ket4 u = t * p;
  for (int k = 0; k < 4; ++k) grad(k) += coeff * 2.0 * (std::conj(u(k)) * p(k)).real();
  for (int m = 0; m < 6; ++m) {
    const int r = kLowerPairs[m][0], c = kLowerPairs[m][1];
    const cplx z = std::conj(u(r)) * p(c);
    grad(4 + 2 * m) += coeff * 2.0 * z.real();
    grad(5 + 2 * m) += coeff * -2.0 * z.imag();
  }
}

}  // namespace detail

inline ReconstructionResult mle_reconstruct(const TomographyDataset& data,
                                            const MleOptions& options = {},
                                            const std::optional<DensityMatrix>& target =
                                                std::nullopt) {
  data.validate();
  const double total = data.total_counts();
  if (!(total > 0.0)) throw std::invalid_argument("mle: dataset has no counts");

  const auto proj = data.projectors();
  const DensityMatrix raw = linear_inversion(data);

  double total_time = 0.0;
  for (const auto& r : data.records) total_time += r.time_s;
  const double scale = total / total_time;  // counts/s, fixes the units of T^dagger T
  const double bg = data.background_rate;

  // Warm start: eigenvalue-floored linear inversion at its best intensity.
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(raw.matrix());
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(options.init_eigen_floor);
  ev /= ev.sum();
  const Matrix4c rho0 =
      es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  double ta = 0.0, signal = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    ta += data.records[i].time_s * projection_probability(rho0, proj[i]);
    signal += data.records[i].counts - bg * data.records[i].time_s;
  }
  const double n_init = std::max(signal, 1e-3 * total) / (scale * ta);
  const Matrix4c a0 = 0.5 * (rho0 + rho0.adjoint()) * n_init;
  Eigen::VectorXd x0 = detail::params_from_matrix(a0);

  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Matrix4c t = detail::t_from_params(x);
    grad.setZero(16);
    double f = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      const auto& rec = data.records[i];
      const double a = (t * proj[i].ket).squaredNorm();
      const double mu_raw = rec.time_s * (scale * a + bg);
      const double mu = std::max(mu_raw, kMinExpectedCounts);
      double dmu;
      if (options.model == LikelihoodModel::poisson) {
        f -= rec.counts * std::log(mu) - mu;
        dmu = -(rec.counts / mu - 1.0);
      } else {
        const double var = std::max(rec.counts, 1.0);
        f += 0.5 * (mu - rec.counts) * (mu - rec.counts) / var;
        dmu = (mu - rec.counts) / var;
      }
      detail::accumulate_gradient(t, proj[i].ket, dmu * rec.time_s * scale / total, grad);
    }
    return f / total;
  };

  BfgsOptions bo;
  bo.max_iterations = options.max_iterations;
  bo.gradient_tol = options.gradient_tol;
  const BfgsResult opt = bfgs_minimize(objective, x0, bo);

  const Matrix4c t = detail::t_from_params(opt.x);
  Matrix4c a = t.adjoint() * t;
  a = 0.5 * (a + a.adjoint()).eval();
  const double tr = a.trace().real();
  if (!(tr > 0.0)) throw std::domain_error("mle: optimizer collapsed to the zero matrix");
  const DensityMatrix rho = DensityMatrix::physical(a / tr);

  ReconstructionResult res{raw, rho, 0.0, 0.0, 0, false, {}};
  res.log_likelihood = log_likelihood(data, rho);
  res.intensity = scale * tr;
  res.iterations = opt.iterations;
  res.converged = opt.converged;
  res.metrics.purity = purity(rho);
  if (target) res.metrics.fidelity = fidelity(rho, *target);
  return res;
}

}  // namespace spdctomo
