#pragma once

// Two-photon polarization states in the ququart basis {HH, HV, VH, VV}.
// The first letter always refers to the first arm of the Kronecker product
// (the angular-selective arm in the tomography setup).

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace spdctomo {

using cplx = std::complex<double>;
using Ket4 = Eigen::Vector4cd;
using Matrix4c = Eigen::Matrix4cd;

inline constexpr std::array<std::string_view, 4> kBasisLabels = {"HH", "HV", "VH",
                                                                 "VV"};

class PureState {
 public:
  // Normalizes; rejects the zero vector.
  explicit PureState(const Ket4& amplitudes) : amps_(amplitudes) {
    const double n = amps_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument("PureState: amplitudes must be non-zero and finite");
    }
    amps_ /= n;
  }

  PureState(cplx c1, cplx c2, cplx c3, cplx c4) : PureState(Ket4(c1, c2, c3, c4)) {}

  const Ket4& amplitudes() const noexcept { return amps_; }
  cplx operator[](int i) const { return amps_(i); }

  Matrix4c projector() const { return amps_ * amps_.adjoint(); }

 private:
  Ket4 amps_;
};

enum class Physicality { raw, physical };

// 4x4 unit-trace Hermitian operator. Physical instances are also positive
// semidefinite (eigenvalues >= -kEigenFloor); raw instances, as produced by
// linear inversion, are not required to be.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenFloor = 1e-9;

  static DensityMatrix physical(const Matrix4c& m) {
    check_hermitian_unit_trace(m);
    const double lo = min_eigenvalue_of(m);
    if (lo < -kEigenFloor) {
      throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                  std::to_string(lo) + " in physical matrix");
    }
    return DensityMatrix(m, Physicality::physical);
  }

  static DensityMatrix raw(const Matrix4c& m) {
    check_hermitian_unit_trace(m);
    return DensityMatrix(m, Physicality::raw);
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return DensityMatrix(psi.projector(), Physicality::physical);
  }

  static DensityMatrix maximally_mixed() {
    return DensityMatrix(Matrix4c::Identity() / 4.0, Physicality::physical);
  }

  const Matrix4c& matrix() const noexcept { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }
  Physicality physicality() const noexcept { return tag_; }
  bool is_physical() const noexcept { return tag_ == Physicality::physical; }

  Eigen::Vector4d eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }
  double min_eigenvalue() const { return min_eigenvalue_of(m_); }

  // Re-tags a raw matrix as physical when its spectrum allows it.
  DensityMatrix as_physical() const { return physical(m_); }

 private:
  DensityMatrix(const Matrix4c& m, Physicality tag) : m_(m), tag_(tag) {}

  static void check_hermitian_unit_trace(const Matrix4c& m) {
    if (!m.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entry");
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTol) {
      throw std::invalid_argument("DensityMatrix: not Hermitian (deviation " +
                                  std::to_string(herm) + ")");
    }
    const cplx tr = m.trace();
    if (std::abs(tr - cplx(1.0, 0.0)) > kTraceTol) {
      throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr.real()) +
                                  " differs from 1");
    }
  }

  static double min_eigenvalue_of(const Matrix4c& m) {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

  Matrix4c m_;
  Physicality tag_;
};

// Exchanges the two arms: |ab> -> |ba>. Swaps the HV and VH basis slots.
inline Matrix4c swap_arms(const Matrix4c& m) {
  Eigen::PermutationMatrix<4> p;
  p.indices() << 0, 2, 1, 3;
  return p * m * p.transpose();
}

inline DensityMatrix swap_arms(const DensityMatrix& rho) {
  return rho.is_physical() ? DensityMatrix::physical(swap_arms(rho.matrix()))
                           : DensityMatrix::raw(swap_arms(rho.matrix()));
}

inline PureState swap_arms(const PureState& psi) {
  const Ket4& a = psi.amplitudes();
  return PureState(a(0), a(2), a(1), a(3));
}

// Bell states.
inline PureState psi_plus() { return PureState(0.0, 1.0, 1.0, 0.0); }
inline PureState psi_minus() { return PureState(0.0, 1.0, -1.0, 0.0); }
inline PureState phi_plus() { return PureState(1.0, 0.0, 0.0, 1.0); }
inline PureState phi_minus() { return PureState(1.0, 0.0, 0.0, -1.0); }

}  // namespace spdctomo
