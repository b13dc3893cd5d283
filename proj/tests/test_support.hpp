#pragma once

#include <random>

#include "spdctomo/sellmeier.hpp"
#include "spdctomo/states.hpp"

namespace spdctomo::testing {

inline UniaxialMaterial kato_bbo() {
  return {{"bbo_o", 2.7359, {}, {{0.01878, 0.01822}}, -0.01354},
          {"bbo_e", 2.3753, {}, {{0.01224, 0.01667}}, -0.01516}};
}

inline UniaxialMaterial ghosh_quartz() {
  return {{"quartz_o", 1.28604141, {{1.07044083, 1.00585997e-2}, {1.10202242, 100.0}}, {}, 0.0},
          {"quartz_e", 1.28851804, {{1.09509924, 1.02101864e-2}, {1.15662475, 100.0}}, {}, 0.0}};
}

// Row-1 sidebands, reference MLE output.
inline Matrix4c reference_rho_row1() {
  using c = cplx;
  Matrix4c m;
  m << c(0.0068, 0), c(-0.0356, -0.0127), c(-0.0370, 0.0004), c(-0.0003, 0.0005),
      c(-0.0356, 0.0127), c(0.4615, 0), c(0.4369, -0.0258), c(0.0095, 0.0225),
      c(-0.0370, -0.0004), c(0.4369, 0.0258), c(0.5275, 0), c(0.0057, 0.0243),
      c(-0.0003, -0.0005), c(0.0095, -0.0225), c(0.0057, -0.0243), c(0.0042, 0);
  return m;
}

// Row-2 sidebands.
inline Matrix4c reference_rho_row2() {
  using c = cplx;
  Matrix4c m;
  m << c(0.0073, 0), c(-0.0170, 0.0146), c(0.0074, 0.0108), c(-0.0028, -0.0030),
      c(-0.0170, -0.0146), c(0.4840, 0), c(0.1430, -0.4071), c(-0.0010, -0.0128),
      c(0.0074, -0.0108), c(0.1430, 0.4071), c(0.5043, 0), c(0.0181, -0.0024),
      c(-0.0028, 0.0030), c(-0.0010, 0.0128), c(0.0181, 0.0024), c(0.0044, 0);
  return m;
}

// Ginibre-distributed mixed state of full rank.
inline DensityMatrix random_density_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix4c g;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) g(r, c) = cplx(n(rng), n(rng));
  Matrix4c rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix::physical(rho);
}

inline PureState random_pure_state(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Ket4 k;
  for (int i = 0; i < 4; ++i) k(i) = cplx(n(rng), n(rng));
  return PureState(k);
}

// Haar-ish random 2x2 unitary from a normalized complex Gaussian pair.
inline Eigen::Matrix2cd random_unitary2(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Matrix2cd g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) g(r, c) = cplx(n(rng), n(rng));
  Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
  return qr.householderQ();
}

}  // namespace spdctomo::testing
