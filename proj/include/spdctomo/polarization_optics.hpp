#pragma once

// Jones calculus for the two tomography analyzers.
//
// Each arm is QWP -> HWP -> polarizer transmitting H. Waveplate angles give
// the fast axis measured from horizontal. Circular states follow
// qwp(0) = diag(1, i):
//   |D> = (|H> + |V>)/sqrt2,  |R> = (|H> - i|V>)/sqrt2,  |L> = (|H> + i|V>)/sqrt2.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "spdctomo/states.hpp"
#include "spdctomo/units.hpp"

namespace spdctomo {

using JonesMatrix = Eigen::Matrix2cd;
using Ket2 = Eigen::Vector2cd;

inline JonesMatrix rotation(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  JonesMatrix r;
  r << c, -s, s, c;
  return r;
}

// Retarder with fast axis at `angle` and retardance `delta`:
// R(angle) diag(1, e^{i delta}) R(-angle).
inline JonesMatrix retarder(double angle, double delta) {
  JonesMatrix d = JonesMatrix::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = std::polar(1.0, delta);
  return rotation(angle) * d * rotation(-angle);
}

inline JonesMatrix hwp(double angle) { return retarder(angle, kPi); }
inline JonesMatrix qwp(double angle) { return retarder(angle, kPi / 2); }

enum class Arm { angular, frequency };

inline std::string_view to_string(Arm a) {
  return a == Arm::angular ? "angular" : "frequency";
}

// Reduces to [0, pi); waveplates are invariant under a half turn.
inline double normalize_plate_angle(double a) {
  double r = std::fmod(a, kPi);
  if (r < 0) r += kPi;
  if (r >= kPi) r -= kPi;
  return r;
}

class AnalyzerSetting {
 public:
  AnalyzerSetting(double qwp_angle, double hwp_angle, Arm arm = Arm::angular)
      : qwp_(normalize_plate_angle(qwp_angle)),
        hwp_(normalize_plate_angle(hwp_angle)),
        arm_(arm) {}

  double qwp_angle() const noexcept { return qwp_; }
  double hwp_angle() const noexcept { return hwp_; }
  Arm arm() const noexcept { return arm_; }

  AnalyzerSetting with_arm(Arm a) const { return AnalyzerSetting(qwp_, hwp_, a); }

 private:
  double qwp_;
  double hwp_;
  Arm arm_;
};

// The polarization transmitted with unit probability through the analyzer:
// qwp(q)^dagger hwp(h)^dagger |H>.
inline Ket2 analyzer_ket(const AnalyzerSetting& s) {
  const Ket2 h(1.0, 0.0);
  return qwp(s.qwp_angle()).adjoint() * hwp(s.hwp_angle()).adjoint() * h;
}

struct TwoPhotonProjector {
  Ket4 ket;

  Matrix4c projector() const { return ket * ket.adjoint(); }
};

// |a> (x) |b>, first factor from the angular arm.
inline TwoPhotonProjector two_photon_projector(const AnalyzerSetting& a,
                                               const AnalyzerSetting& b) {
  const Ket2 ka = analyzer_ket(a);
  const Ket2 kb = analyzer_ket(b);
  TwoPhotonProjector p;
  p.ket << ka(0) * kb(0), ka(0) * kb(1), ka(1) * kb(0), ka(1) * kb(1);
  return p;
}

// Waveplate angles realizing the four single-photon analysis states.
inline AnalyzerSetting analyzer_for(char label, Arm arm) {
  switch (label) {
    case 'H': return AnalyzerSetting(0.0, 0.0, arm);
    case 'V': return AnalyzerSetting(0.0, deg_to_rad(45.0), arm);
    case 'D': return AnalyzerSetting(deg_to_rad(45.0), deg_to_rad(22.5), arm);
    case 'R': return AnalyzerSetting(0.0, deg_to_rad(22.5), arm);
    case 'L': return AnalyzerSetting(deg_to_rad(90.0), deg_to_rad(22.5), arm);
    default: throw std::invalid_argument(std::string("unknown analyzer label ") + label);
  }
}

struct J16Entry {
  AnalyzerSetting angular;
  AnalyzerSetting frequency;
  std::string label;
};

inline constexpr std::array<std::string_view, 16> kJ16Labels = {
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
    "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};

inline std::array<J16Entry, 16> j16_settings() {
  auto make = [](std::string_view lbl) {
    return J16Entry{analyzer_for(lbl[0], Arm::angular), analyzer_for(lbl[1], Arm::frequency),
                    std::string(lbl)};
  };
  return {make(kJ16Labels[0]),  make(kJ16Labels[1]),  make(kJ16Labels[2]),
          make(kJ16Labels[3]),  make(kJ16Labels[4]),  make(kJ16Labels[5]),
          make(kJ16Labels[6]),  make(kJ16Labels[7]),  make(kJ16Labels[8]),
          make(kJ16Labels[9]),  make(kJ16Labels[10]), make(kJ16Labels[11]),
          make(kJ16Labels[12]), make(kJ16Labels[13]), make(kJ16Labels[14]),
          make(kJ16Labels[15])};
}

inline std::array<TwoPhotonProjector, 16> j16_projectors() {
  const auto table = j16_settings();
  std::array<TwoPhotonProjector, 16> out;
  for (std::size_t i = 0; i < 16; ++i) {
    out[i] = two_photon_projector(table[i].angular, table[i].frequency);
  }
  return out;
}

}  // namespace spdctomo
