// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "spdctomo/io.hpp"
#include "spdctomo/scans.hpp"
#include "spdctomo/spdc_model.hpp"
#include "spdctomo/tomography.hpp"
#include "../test_support.hpp"

using namespace spdctomo;
namespace st = spdctomo::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

UniaxialMaterial bbo_material() {
  return {load_sellmeier_set("bbo_kato1986_o"), load_sellmeier_set("bbo_kato1986_e")};
}

// BBO crystal with D, B taken from the 5-point finite-difference oracle.
CrystalParams derived_bbo() {
  const auto m = bbo_material();
  CrystalParams c;
  c.length_mm = 1.0;
  c.cut_angle = deg_to_rad(47.6);
  c.pump_wavelength_nm = 406.0;
  const auto fd = crystal_dispersion_numeric(m, c.cut_angle, 812.0);
  c.D = fd.D;
  c.B = fd.B;
  c.material = m;
  c.validate();
  return c;
}

SidebandMode mode_nm(double signal_nm, double theta) {
  return SidebandMode::from_signal_wavelength(signal_nm, theta, 406.0);
}

double max_abs(const Matrix4c& a, const Matrix4c& b) { return (a - b).cwiseAbs().maxCoeff(); }

Outcome criterion1() {
  Outcome o;
  const auto rho = DensityMatrix::physical(st::reference_rho_row1());
  const double f = fidelity(rho, psi_plus());
  const double analytic = 0.5 * (rho(1, 1).real() + rho(2, 2).real()) + rho(1, 2).real();
  o.check(std::abs(f - 0.931) <= 0.02, "F(row1, Psi+) = " + fmt("%.4f", f) + " (target 0.931 +- 0.02)");
  o.check(std::abs(f - analytic) < 1e-10, "analytic <Psi+|rho|Psi+> = " + fmt("%.4f", analytic));
  return o;
}

// Row-2 rho_23 has phase -1.23, i.e. c3/c2 ~ exp(+1.23 i) in the
// (angular, frequency) ordering of the matrix; the listed -6pi/15 refers to
// the swapped ordering. Both readings are reported.
Outcome criterion2() {
  Outcome o;
  const auto rho = DensityMatrix::physical(st::reference_rho_row2());
  const double phi = -6.0 * kPi / 15.0;
  const double f = fidelity(rho, swap_arms(sideband_state_for_phase(phi)));
  const double f_literal = fidelity(rho, sideband_state_for_phase(phi));
  o.check(std::abs(f - 0.926) <= 0.02,
          "F(row2, state(2) phi=-6pi/15, frequency arm first) = " + fmt("%.4f", f) +
              " (target 0.926 +- 0.02)");
  o.detail += "; same state in matrix arm order: " + fmt("%.4f", f_literal) +
              "; arg(rho_23) = " + fmt("%.4f", std::arg(rho(1, 2)));
  return o;
}

Outcome criterion3() {
  Outcome o;
  const double p6 = purity(DensityMatrix::physical(st::reference_rho_row1()));
  const double p7 = purity(DensityMatrix::physical(st::reference_rho_row2()));
  o.check(std::abs(p6 - 0.8824) <= 0.005, "purity(row1) = " + fmt("%.5f", p6) + " (0.8824 +- 0.005)");
  o.check(std::abs(p7 - 0.8634) <= 0.005, "purity(row2) = " + fmt("%.5f", p7) + " (0.8634 +- 0.005)");
  return o;
}

Outcome criterion4() {
  Outcome o;
  std::mt19937_64 rng(2024);
  double worst_li = 0.0, worst_f = 1.0;
  for (int k = 0; k < 100; ++k) {
    const auto rho = k % 2 == 0 ? st::random_density_matrix(rng)
                                : DensityMatrix::from_pure(st::random_pure_state(rng));
    const auto data = expected_dataset(rho, 1e6, 1.0);
    worst_li = std::max(worst_li, max_abs(linear_inversion(data).matrix(), rho.matrix()));
    const auto res = mle_reconstruct(data);
    worst_f = std::min(worst_f, fidelity(res.rho_mle, rho));
  }
  o.check(worst_li < 1e-8, "max linear-inversion entry error = " + fmt("%.2e", worst_li) + " (< 1e-8)");
  o.check(worst_f > 0.9999, "min MLE fidelity = " + fmt("%.8f", worst_f) + " (> 0.9999)");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto rho6 = DensityMatrix::physical(st::reference_rho_row1());
  std::vector<double> fids;
  double worst_eig = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto res = mle_reconstruct(simulate_counts(rho6, 1e6, 1.0, seed));
    fids.push_back(fidelity(res.rho_mle, rho6));
    worst_eig = std::min(worst_eig, res.rho_mle.min_eigenvalue());
  }
  std::nth_element(fids.begin(), fids.begin() + 25, fids.end());
  const double upper = fids[25];
  std::nth_element(fids.begin(), fids.begin() + 24, fids.end());
  const double median = 0.5 * (upper + fids[24]);

  int negative = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto data = simulate_counts(rho6, 200.0, 1.0, 10000 + seed);
    const auto res = mle_reconstruct(data);
    if (res.rho_raw.min_eigenvalue() < 0.0) ++negative;
    worst_eig = std::min(worst_eig, res.rho_mle.min_eigenvalue());
  }
  o.check(median > 0.999, "median MLE fidelity at 1e6 counts = " + fmt("%.6f", median) + " (> 0.999)");
  o.check(negative >= 1, "negative-eigenvalue raw inversions at 200 counts: " +
                             std::to_string(negative) + "/200 (>= 1)");
  o.check(worst_eig >= -1e-9, "min MLE eigenvalue = " + fmt("%.2e", worst_eig) + " (>= -1e-9)");
  return o;
}

Outcome criterion6() {
  Outcome o;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double phi = u(rng);
    const auto [c, x] = diagonal_rates(phi);
    worst = std::max(worst, std::abs(c + x - std::pow(sinc(phi / 2), 2)));
  }
  const auto [c0, x0] = diagonal_rates(0.0);
  o.check(worst <= 1e-12, "max |co + cross - sinc^2| = " + fmt("%.1e", worst) + " (<= 1e-12)");
  o.check(c0 == 1.0 && x0 == 0.0, "phi = 0 gives (" + fmt("%g", c0) + ", " + fmt("%g", x0) + ")");

  const auto crystal = derived_bbo();
  ScanConfig s;
  s.compensator = CompensatorParams::exact_cancellation(crystal, 6.5);
  double cross_max = 0.0;
  for (auto axis : {ScanAxis::angular, ScanAxis::frequency}) {
    s.axis = axis;
    s.range = axis == ScanAxis::angular ? AxisRange{-0.01, 0.01, 1001}
                                        : AxisRange{-3e13, 3e13, 1001};
    for (const auto& p : run_scan(s, crystal).points) cross_max = std::max(cross_max, p.crosspolar);
  }
  o.check(cross_max <= 1e-12,
          "compensated crosspolar max = " + fmt("%.1e", cross_max) + " (angular + frequency scans)");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto c = derived_bbo();
  const double row1 = relative_phase(c, mode_nm(809.5, 0.002));
  const double row2 = relative_phase(c, mode_nm(808.2, 0.004));
  // Printed phase label mapped to the sign convention of the model (see criterion 2).
  const double target2 = 6.0 * kPi / 15.0;
  o.check(std::abs(row1) <= 0.15, "row 1 phi = " + fmt("%+.4f", row1) + " (0 +- 0.15)");
  o.check(std::abs(row2 - target2) <= 0.15,
          "row 2 phi = " + fmt("%+.4f", row2) + " (6pi/15 = 1.2566 +- 0.15; literal -6pi/15 off by " +
              fmt("%.3f", std::abs(row2 + target2)) + ")");

  const double dw = SidebandMode::from_signal_wavelength(806.0, 0.0, 406.0).omega;
  const AxisRange wr{-dw, dw, 121}, tr{-0.01, 0.01, 201};
  const auto g = phase_amplitude_grid(c, wr, tr);
  const double cell = (tr.max - tr.min) / (tr.points - 1);
  double worst = 0.0;
  int columns = 0;
  for (Eigen::Index col = 0; col < g.amplitude.cols(); ++col) {
    const double line = -c.D * g.omega_axis[col] / c.B;
    if (std::abs(line) > tr.max) continue;
    Eigen::Index row;
    g.amplitude.col(col).maxCoeff(&row);
    worst = std::max(worst, std::abs(g.theta_axis[row] - line));
    ++columns;
  }
  o.check(worst <= cell, "ridge offset from D w + B theta = 0: " + fmt("%.2e", worst) +
                             " rad over " + std::to_string(columns) + " columns (cell " +
                             fmt("%.1e", cell) + ")");
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto c = derived_bbo();
  const auto center = mode_nm(809.5, 0.002);

  const double p0 = purity(band_averaged_state(c, center, {}));
  o.check(std::abs(p0 - 1.0) < 1e-12, "zero bandwidth purity = " + fmt("%.12f", p0));

  std::vector<WeightedPhase> uniform;
  for (int i = 0; i < 4096; ++i) uniform.push_back({kTwoPi * i / 4096.0, 1.0});
  const auto mix = mix_sideband_phases(uniform);
  Matrix4c half = Matrix4c::Zero();
  half(1, 1) = 0.5;
  half(2, 2) = 0.5;
  const double pu = purity(mix);
  o.check(std::abs(pu - 0.5) < 1e-6 && max_abs(mix.matrix(), half) < 1e-6,
          "uniform-phase purity = " + fmt("%.8f", pu));

  bool monotone = true;
  double prev = 1.0;
  for (double fwhm : {0.0, 0.1, 0.2, 0.35, 0.7, 1.5, 3.0, 6.0}) {
    const double p = purity(band_averaged_state(c, center, {fwhm, 0.002}));
    monotone = monotone && p <= prev + 1e-12;
    prev = p;
  }
  prev = 1.0;
  for (double width : {0.0, 0.0005, 0.001, 0.002, 0.004, 0.008, 0.016}) {
    const double p = purity(band_averaged_state(c, center, {0.35, width}));
    monotone = monotone && p <= prev + 1e-12;
    prev = p;
  }
  o.check(monotone, "purity non-increasing along frequency and angular ladders");

  // Dense midpoint oracle, 300 x 300 points.
  const BandFilter f{0.35, 0.004};
  const double lam = center.signal_wavelength_nm(406.0) * 1e-9;
  const double sigma = kTwoPi * kSpeedOfLight * f.freq_fwhm_nm * 1e-9 / (lam * lam) /
                       (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const int n = 300;
  double wsum = 0.0;
  cplx coh = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = -3.0 + 6.0 * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double w = center.omega + u * sigma;
      const double t = center.theta + f.angular_width * ((j + 0.5) / n - 0.5);
      const double x = (c.D * w + c.B * t) * c.length_m();
      const double amp = x == 0.0 ? 1.0 : std::sin(x / 2) / (x / 2);
      const double weight = std::exp(-0.5 * u * u) * amp * amp;
      wsum += weight;
      coh += weight * std::polar(1.0, -x);
    }
  }
  const double p_oracle = 0.5 + 0.5 * std::norm(coh / wsum);
  const double p_quad = purity(band_averaged_state(c, center, f));
  const double rel = std::abs(p_quad - p_oracle) / p_oracle;
  o.check(rel < 5e-4, "quadrature purity " + fmt("%.6f", p_quad) + " vs dense grid " +
                          fmt("%.6f", p_oracle) + " (rel " + fmt("%.1e", rel) + ")");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1 fidelity row1 vs Psi+", criterion1},
      {"2 fidelity row2 vs state(2) phi=-6pi/15", criterion2},
      {"3 purity row1 / row2", criterion3},
      {"4 reconstruction roundtrip (100 states)", criterion4},
      {"5 noisy reconstruction behaviour", criterion5},
      {"6 diagonal-rate identities and compensated scans", criterion6},
      {"7 phase-map anchors and ridge", criterion7},
      {"8 band-averaging properties", criterion8},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  criterion %s: %s (%.0f ms)\n", o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), ms);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
