#pragma once

// Sideband structure of collinear, frequency-degenerate type-II SPDC.
//
// Conventions used throughout:
//   * omega is the angular-frequency detuning of the first photon from
//     degeneracy, omega = Omega_s - Omega_p / 2 (rad/s).
//   * theta is the internal scattering angle of that photon (rad), positive
//     when it tilts towards the optic axis; its partner sits at (-omega, -theta).
//   * Ordinary = H, extraordinary = V.
//   * Phase mismatch dz = k_p - k_s - k_i, linearized as D omega + B theta with
//     D = dk_e/domega - dk_o/domega and B = dk_e/dtheta.
//   * The relative phase of |V_w H_-w> against |H_w V_-w> is phi = dz L.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdctomo/quadrature.hpp"
#include "spdctomo/sellmeier.hpp"
#include "spdctomo/states.hpp"
#include "spdctomo/units.hpp"

namespace spdctomo {

struct DispersionCoefficients {
  double D = 0.0;  // s/m
  double B = 0.0;  // rad/m per rad
};

// Analytic D and B of a crystal whose optic axis makes `cut_angle` with the
// pump, evaluated at the degenerate wavelength.
inline DispersionCoefficients crystal_dispersion(const UniaxialMaterial& m,
                                                 double cut_angle,
                                                 double degenerate_wavelength_nm) {
  const double lum = degenerate_wavelength_nm * 1e-3;
  const double omega0 = angular_frequency_from_nm(degenerate_wavelength_nm);
  DispersionCoefficients out;
  out.D = (m.group_index_e(lum, cut_angle) - m.group_index_o(lum)) / kSpeedOfLight;
  out.B = -(omega0 / kSpeedOfLight) * m.dn_e_dpsi(lum, cut_angle);
  return out;
}

// Same coefficients by 5-point central differences of k_o(Omega) and
// k_e(Omega, theta). Used for the consistency check of stored D, B values.
inline DispersionCoefficients crystal_dispersion_numeric(const UniaxialMaterial& m,
                                                         double cut_angle,
                                                         double degenerate_wavelength_nm) {
  const double w0 = angular_frequency_from_nm(degenerate_wavelength_nm);
  const double h = w0 * 1e-4;
  auto stencil = [](auto&& f, double x, double step) {
    return (-f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)) /
           (12 * step);
  };
  DispersionCoefficients out;
  const double dke = stencil([&](double w) { return m.k_e(w, cut_angle); }, w0, h);
  const double dko = stencil([&](double w) { return m.k_o(w); }, w0, h);
  out.D = dke - dko;
  out.B = stencil([&](double t) { return m.k_e(w0, cut_angle - t); }, 0.0, 1e-4);
  return out;
}

struct CrystalParams {
  double length_mm = 1.0;
  double cut_angle = 0.0;  // rad
  double pump_wavelength_nm = 0.0;
  double D = 0.0;
  double B = 0.0;
  std::optional<UniaxialMaterial> material;

  static constexpr double kConsistencyTol = 1e-6;

  double length_m() const noexcept { return length_mm * 1e-3; }
  double degenerate_wavelength_nm() const noexcept { return 2.0 * pump_wavelength_nm; }
  double pump_angular_frequency() const noexcept {
    return angular_frequency_from_nm(pump_wavelength_nm);
  }

  void validate() const {
    if (!(length_mm > 0.0)) throw std::invalid_argument("crystal: length_L must be > 0");
    if (!(pump_wavelength_nm > 0.0)) {
      throw std::invalid_argument("crystal: pump_wavelength must be > 0");
    }
    if (!(cut_angle > 0.0 && cut_angle < kPi / 2)) {
      throw std::invalid_argument("crystal: cut_angle must lie in (0, 90) degrees");
    }
    if (!std::isfinite(D) || !std::isfinite(B)) {
      throw std::invalid_argument("crystal: D and B must be finite");
    }
    if (material) {
      const auto fd = crystal_dispersion_numeric(*material, cut_angle,
                                                 degenerate_wavelength_nm());
      auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max(std::abs(b), 1e-300);
      };
      if (rel(D, fd.D) > kConsistencyTol) {
        throw std::invalid_argument("crystal: D inconsistent with Sellmeier data (" +
                                    std::to_string(D) + " vs " + std::to_string(fd.D) + ")");
      }
      if (rel(B, fd.B) > kConsistencyTol) {
        throw std::invalid_argument("crystal: B inconsistent with Sellmeier data (" +
                                    std::to_string(B) + " vs " + std::to_string(fd.B) + ")");
      }
    }
  }

  static CrystalParams from_material(const UniaxialMaterial& m, double length_mm,
                                     double cut_angle, double pump_wavelength_nm) {
    CrystalParams c;
    c.length_mm = length_mm;
    c.cut_angle = cut_angle;
    c.pump_wavelength_nm = pump_wavelength_nm;
    const auto coeff = crystal_dispersion(m, cut_angle, 2.0 * pump_wavelength_nm);
    c.D = coeff.D;
    c.B = coeff.B;
    c.material = m;
    return c;
  }
};

struct SidebandMode {
  double omega = 0.0;  // rad/s
  double theta = 0.0;  // rad, internal

  SidebandMode conjugate() const noexcept { return {-omega, -theta}; }

  double signal_wavelength_nm(double pump_wavelength_nm) const {
    return wavelength_nm_from_angular_frequency(
        0.5 * angular_frequency_from_nm(pump_wavelength_nm) + omega);
  }
  double idler_wavelength_nm(double pump_wavelength_nm) const {
    return wavelength_nm_from_angular_frequency(
        0.5 * angular_frequency_from_nm(pump_wavelength_nm) - omega);
  }

  static SidebandMode from_signal_wavelength(double signal_nm, double theta,
                                             double pump_wavelength_nm) {
    if (!(signal_nm > 0.0)) throw std::invalid_argument("signal wavelength must be > 0");
    return {angular_frequency_from_nm(signal_nm) -
                0.5 * angular_frequency_from_nm(pump_wavelength_nm),
            theta};
  }
};

// Snell's law at a flat face between vacuum and a medium of index n.
inline double external_to_internal_angle(double theta_ext, double n) {
  return std::asin(std::sin(theta_ext) / n);
}
inline double internal_to_external_angle(double theta_int, double n) {
  return std::asin(std::clamp(n * std::sin(theta_int), -1.0, 1.0));
}

// Birefringent plate placed after the crystal. Adds
//   phi_comp = (D_c omega + B_c theta) * length + phase_offset.
struct CompensatorParams {
  double length_mm = 0.0;
  double axis_angle = 0.0;  // rad
  double D_c = 0.0;         // s/m
  double B_c = 0.0;         // rad/m per rad
  double phase_offset = 0.0;
  std::optional<UniaxialMaterial> material;

  double length_m() const noexcept { return length_mm * 1e-3; }

  void validate() const {
    if (!(length_mm >= 0.0)) throw std::invalid_argument("compensator: length must be >= 0");
    if (!std::isfinite(D_c) || !std::isfinite(B_c) || !std::isfinite(phase_offset)) {
      throw std::invalid_argument("compensator: coefficients must be finite");
    }
  }

  // Plate with the optic axis at `axis_angle` in the V plane. Each photon
  // crosses the plate once, so both terms of the pair pick up the plate's
  // H/V delay with opposite signs of the detuning.
  static CompensatorParams from_material(const UniaxialMaterial& m, double length_mm,
                                         double axis_angle, double center_wavelength_nm);

  // Plate that cancels the crystal's linear phase exactly.
  static CompensatorParams exact_cancellation(const CrystalParams& crystal,
                                              double length_mm) {
    if (!(length_mm > 0.0)) {
      throw std::invalid_argument("exact_cancellation: length must be > 0");
    }
    CompensatorParams c;
    c.length_mm = length_mm;
    c.D_c = -crystal.D * crystal.length_mm / length_mm;
    c.B_c = -crystal.B * crystal.length_mm / length_mm;
    return c;
  }
};

// Full (non-linearized) phase picked up by the two-photon terms in a plate:
// L [(k_V - k_H)(Omega0 + w, th) - (k_V - k_H)(Omega0 - w, -th)].
inline double compensator_exact_phase(const UniaxialMaterial& m, double length_mm,
                                      double axis_angle, double center_wavelength_nm,
                                      const SidebandMode& mode) {
  const double w0 = angular_frequency_from_nm(center_wavelength_nm);
  auto delta_k = [&](double w, double th) {
    return (m.k_e(w, axis_angle - th) - m.k_o(w)) * std::cos(th);
  };
  return length_mm * 1e-3 *
         (delta_k(w0 + mode.omega, mode.theta) - delta_k(w0 - mode.omega, -mode.theta));
}

inline CompensatorParams CompensatorParams::from_material(const UniaxialMaterial& m,
                                                          double length_mm,
                                                          double axis_angle,
                                                          double center_wavelength_nm) {
  const auto coeff = crystal_dispersion(m, axis_angle, center_wavelength_nm);
  CompensatorParams c;
  c.length_mm = length_mm;
  c.axis_angle = axis_angle;
  c.D_c = 2.0 * coeff.D;
  c.B_c = 2.0 * coeff.B;
  c.phase_offset = wrap_phase(
      compensator_exact_phase(m, length_mm, axis_angle, center_wavelength_nm, {}));
  c.material = m;
  return c;
}

inline double phase_mismatch(const CrystalParams& crystal, const SidebandMode& mode) {
  return crystal.D * mode.omega + crystal.B * mode.theta;
}

inline double compensator_phase(const CompensatorParams& comp, const SidebandMode& mode) {
  if (comp.length_mm == 0.0) return 0.0;
  return (comp.D_c * mode.omega + comp.B_c * mode.theta) * comp.length_m() +
         wrap_phase(comp.phase_offset);
}

// Not wrapped.
inline double relative_phase(const CrystalParams& crystal, const SidebandMode& mode,
                             const std::optional<CompensatorParams>& comp = std::nullopt) {
  double phi = phase_mismatch(crystal, mode) * crystal.length_m();
  if (comp) phi += compensator_phase(*comp, mode);
  return phi;
}

inline double spectral_amplitude(const CrystalParams& crystal, const SidebandMode& mode) {
  return sinc(0.5 * phase_mismatch(crystal, mode) * crystal.length_m());
}

// (0, 1, e^{i phi}, 0) / sqrt(2).
inline PureState sideband_state_for_phase(double phi) {
  const double s = 1.0 / std::sqrt(2.0);
  return PureState(0.0, s, std::polar(s, phi), 0.0);
}

inline PureState sideband_state(const CrystalParams& crystal, const SidebandMode& mode,
                                const std::optional<CompensatorParams>& comp = std::nullopt) {
  return sideband_state_for_phase(relative_phase(crystal, mode, comp));
}

struct WeightedPhase {
  double phase = 0.0;
  double weight = 0.0;
};

// Normalized incoherent mixture of sideband states.
inline DensityMatrix mix_sideband_phases(std::span<const WeightedPhase> terms) {
  double total = 0.0;
  cplx coherence = 0.0;
  for (const auto& t : terms) {
    if (!(t.weight >= 0.0)) throw std::invalid_argument("mixture weights must be >= 0");
    total += t.weight;
    coherence += t.weight * std::polar(1.0, -t.phase);
  }
  if (!(total > 0.0)) {
    throw std::domain_error("mixture: all weights vanish (mode lies outside the line width)");
  }
  Matrix4c rho = Matrix4c::Zero();
  rho(1, 1) = 0.5;
  rho(2, 2) = 0.5;
  rho(1, 2) = 0.5 * coherence / total;
  rho(2, 1) = std::conj(rho(1, 2));
  return DensityMatrix::physical(rho);
}

// Filter windows in the two arms: a Gaussian spectral filter with the given
// FWHM in signal wavelength and a top-hat angular aperture of full width
// `angular_width`. Zero width collapses the corresponding axis.
struct BandFilter {
  double freq_fwhm_nm = 0.0;
  double angular_width = 0.0;  // rad
};

inline constexpr int kDefaultQuadraturePoints = 64;

inline DensityMatrix band_averaged_state(const CrystalParams& crystal,
                                         const SidebandMode& center,
                                         const BandFilter& filter,
                                         const std::optional<CompensatorParams>& comp =
                                             std::nullopt,
                                         int quadrature_points = kDefaultQuadraturePoints) {
  if (!(filter.freq_fwhm_nm >= 0.0) || !(filter.angular_width >= 0.0)) {
    throw std::invalid_argument("band_averaged_state: bandwidths must be >= 0");
  }
  if (quadrature_points < 1) {
    throw std::invalid_argument("band_averaged_state: quadrature_points must be >= 1");
  }

  // Frequency axis: Gaussian in omega, FWHM mapped from wavelength at the
  // selected signal wavelength, integrated over +-3 sigma.
  QuadratureRule w_rule{{center.omega}, {1.0}};
  double sigma = 0.0;
  if (filter.freq_fwhm_nm > 0.0) {
    const double lam = center.signal_wavelength_nm(crystal.pump_wavelength_nm);
    const double fwhm_omega =
        kTwoPi * kSpeedOfLight * (filter.freq_fwhm_nm * 1e-9) / std::pow(lam * 1e-9, 2);
    sigma = fwhm_omega / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    w_rule = gauss_legendre(quadrature_points, center.omega - 3 * sigma,
                            center.omega + 3 * sigma);
  }
  QuadratureRule t_rule{{center.theta}, {1.0}};
  if (filter.angular_width > 0.0) {
    t_rule = gauss_legendre(quadrature_points, center.theta - 0.5 * filter.angular_width,
                            center.theta + 0.5 * filter.angular_width);
  }

  std::vector<WeightedPhase> terms;
  terms.reserve(w_rule.nodes.size() * t_rule.nodes.size());
  for (std::size_t i = 0; i < w_rule.nodes.size(); ++i) {
    double wi = w_rule.weights[i];
    if (sigma > 0.0) {
      const double u = (w_rule.nodes[i] - center.omega) / sigma;
      wi *= std::exp(-0.5 * u * u);
    }
    for (std::size_t j = 0; j < t_rule.nodes.size(); ++j) {
      const SidebandMode m{w_rule.nodes[i], t_rule.nodes[j]};
      const double f = spectral_amplitude(crystal, m);
      terms.push_back({relative_phase(crystal, m, comp), wi * t_rule.weights[j] * f * f});
    }
  }
  return mix_sideband_phases(terms);
}

struct AxisRange {
  double min = 0.0;
  double max = 0.0;
  int points = 2;

  std::vector<double> values() const {
    if (points < 1) throw std::invalid_argument("axis: resolution must be >= 1");
    if (points == 1) {
      if (min != max) {
        throw std::invalid_argument("axis: a single point needs min == max");
      }
      return {min};
    }
    if (!(max > min)) throw std::invalid_argument("axis: range must satisfy min < max");
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) {
      v[i] = min + (max - min) * static_cast<double>(i) / (points - 1);
    }
    return v;
  }
};

struct PhaseMapGrid {
  std::vector<double> omega_axis;
  std::vector<double> theta_axis;
  Eigen::MatrixXd phase;      // rows: theta, cols: omega
  Eigen::MatrixXd amplitude;  // |F|
};

inline PhaseMapGrid phase_amplitude_grid(const CrystalParams& crystal,
                                         const AxisRange& omega_range,
                                         const AxisRange& theta_range,
                                         const std::optional<CompensatorParams>& comp =
                                             std::nullopt) {
  PhaseMapGrid g;
  g.omega_axis = omega_range.values();
  g.theta_axis = theta_range.values();
  const auto rows = static_cast<Eigen::Index>(g.theta_axis.size());
  const auto cols = static_cast<Eigen::Index>(g.omega_axis.size());
  g.phase.resize(rows, cols);
  g.amplitude.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const SidebandMode m{g.omega_axis[c], g.theta_axis[r]};
      g.phase(r, c) = relative_phase(crystal, m, comp);
      g.amplitude(r, c) = std::abs(spectral_amplitude(crystal, m));
    }
  }
  return g;
}

}  // namespace spdctomo
