#pragma once

// One-dimensional interference scans across the SPDC line width.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spdctomo/spdc_model.hpp"

namespace spdctomo {

// Coincidence rates behind a pair of diagonal analyzers:
// R(45/45) = sinc^2(phi/2) cos^2(phi/2), R(45/-45) = sinc^2(phi/2) sin^2(phi/2).
inline std::pair<double, double> diagonal_rates(double phi) {
  const double env = std::pow(sinc(0.5 * phi), 2);
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  return {env * c * c, env * s * s};
}

enum class ScanAxis { angular, frequency };
enum class ScanBasis { natural, diagonal };

struct ScanConfig {
  ScanAxis axis = ScanAxis::angular;
  double fixed = 0.0;  // omega (rad/s) for angular scans, theta (rad) otherwise
  AxisRange range;     // theta (rad) or omega (rad/s)
  ScanBasis basis = ScanBasis::diagonal;
  std::optional<CompensatorParams> compensator;
  double n0 = 1.0;
  double smearing_width = 0.0;  // Gaussian sigma along the axis, same units

  void validate() const {
    if (range.points < 2) throw std::invalid_argument("scan: resolution must be >= 2");
    if (!(range.max > range.min)) throw std::invalid_argument("scan: empty range");
    if (!(n0 > 0.0)) throw std::invalid_argument("scan: n0 must be > 0");
    if (!(smearing_width >= 0.0)) throw std::invalid_argument("scan: smearing width < 0");
    if (compensator) compensator->validate();
  }

  SidebandMode mode_at(double value) const {
    return axis == ScanAxis::angular ? SidebandMode{fixed, value} : SidebandMode{value, fixed};
  }
};

struct ScanPoint {
  double axis_value = 0.0;
  double copolar = 0.0;
  double crosspolar = 0.0;
  double envelope = 0.0;
  double phase = 0.0;  // total relative phase, rad
};

struct ScanResult {
  std::vector<ScanPoint> points;
};

// Gaussian convolution along the scan axis, normalized per output point.
inline ScanResult smear(const ScanResult& in, double sigma) {
  if (sigma <= 0.0) return in;
  ScanResult out = in;
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    double wsum = 0.0, co = 0.0, cross = 0.0, env = 0.0;
    for (const auto& q : in.points) {
      const double u = (q.axis_value - in.points[i].axis_value) / sigma;
      const double w = std::exp(-0.5 * u * u);
      wsum += w;
      co += w * q.copolar;
      cross += w * q.crosspolar;
      env += w * q.envelope;
    }
    out.points[i].copolar = co / wsum;
    out.points[i].crosspolar = cross / wsum;
    out.points[i].envelope = env / wsum;
  }
  return out;
}

// The envelope is the crystal's |F|^2; the compensator only shifts the phase
// that splits it between the two analyzer outputs.
inline ScanResult run_scan(const ScanConfig& config, const CrystalParams& crystal) {
  config.validate();
  ScanResult res;
  for (double v : config.range.values()) {
    const SidebandMode m = config.mode_at(v);
    const double env = std::pow(spectral_amplitude(crystal, m), 2) * config.n0;
    const double phi = relative_phase(crystal, m, config.compensator);
    ScanPoint p;
    p.axis_value = v;
    p.envelope = env;
    p.phase = phi;
    if (config.basis == ScanBasis::diagonal) {
      const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
      p.copolar = env * c * c;
      p.crosspolar = env * s * s;
    } else {
      p.copolar = 0.5 * env;
      p.crosspolar = 0.5 * env;
    }
    res.points.push_back(p);
  }
  return smear(res, config.smearing_width);
}

}  // namespace spdctomo
