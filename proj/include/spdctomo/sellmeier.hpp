#pragma once

// Refractive-index dispersion of uniaxial crystals.
//
// A SellmeierSet evaluates
//
//   n^2(lambda) = A + sum_i b_i lambda^2 / (lambda^2 - c_i)
//                   + sum_j p_j / (lambda^2 - q_j)
//                   + d lambda^2
//
// with lambda in micrometers. Both the classic Kato-style form
// (A + p/(lambda^2 - q) - d lambda^2) and the resonance form used for
// quartz are special cases.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdctomo/units.hpp"

namespace spdctomo {

struct SellmeierTerm {
  double strength = 0.0;
  double pole = 0.0;  // um^2
};

struct SellmeierSet {
  std::string name;
  double constant = 1.0;
  std::vector<SellmeierTerm> resonances;  // b lambda^2 / (lambda^2 - c)
  std::vector<SellmeierTerm> poles;       // p / (lambda^2 - q)
  double lambda2 = 0.0;                   // d lambda^2

  double index_squared(double lambda_um) const {
    const double l2 = lambda_um * lambda_um;
    double n2 = constant + lambda2 * l2;
    for (const auto& t : resonances) n2 += t.strength * l2 / (l2 - t.pole);
    for (const auto& t : poles) n2 += t.strength / (l2 - t.pole);
    return n2;
  }

  double index(double lambda_um) const {
    const double n2 = index_squared(lambda_um);
    if (!(n2 > 0.0)) {
      throw std::domain_error("Sellmeier set '" + name +
                              "' gives non-positive n^2 at " +
                              std::to_string(lambda_um) + " um");
    }
    return std::sqrt(n2);
  }

  // dn/dlambda in 1/um, analytic.
  double index_derivative(double lambda_um) const {
    const double l = lambda_um;
    const double l2 = l * l;
    double dn2 = 2.0 * lambda2 * l;
    for (const auto& t : resonances) {
      const double den = l2 - t.pole;
      dn2 += -2.0 * t.strength * t.pole * l / (den * den);
    }
    for (const auto& t : poles) {
      const double den = l2 - t.pole;
      dn2 += -2.0 * t.strength * l / (den * den);
    }
    return dn2 / (2.0 * index(l));
  }

  // Group index n - lambda dn/dlambda.
  double group_index(double lambda_um) const {
    return index(lambda_um) - lambda_um * index_derivative(lambda_um);
  }
};

// Ordinary wave polarized H, extraordinary wave polarized V. The
// extraordinary index depends on the angle psi between the wave vector and
// the optic axis.
struct UniaxialMaterial {
  SellmeierSet ordinary;
  SellmeierSet extraordinary;

  double n_o(double lambda_um) const { return ordinary.index(lambda_um); }

  double n_e(double lambda_um, double psi) const {
    const double no = ordinary.index(lambda_um);
    const double ne = extraordinary.index(lambda_um);
    const double c = std::cos(psi), s = std::sin(psi);
    return 1.0 / std::sqrt(c * c / (no * no) + s * s / (ne * ne));
  }

  double dn_e_dlambda(double lambda_um, double psi) const {
    const double no = ordinary.index(lambda_um);
    const double ne = extraordinary.index(lambda_um);
    const double dno = ordinary.index_derivative(lambda_um);
    const double dne = extraordinary.index_derivative(lambda_um);
    const double n = n_e(lambda_um, psi);
    const double c = std::cos(psi), s = std::sin(psi);
    return n * n * n *
           (c * c * dno / (no * no * no) + s * s * dne / (ne * ne * ne));
  }

  double dn_e_dpsi(double lambda_um, double psi) const {
    const double no = ordinary.index(lambda_um);
    const double ne = extraordinary.index(lambda_um);
    const double n = n_e(lambda_um, psi);
    return -0.5 * n * n * n * std::sin(2.0 * psi) *
           (1.0 / (ne * ne) - 1.0 / (no * no));
  }

  double group_index_o(double lambda_um) const {
    return ordinary.group_index(lambda_um);
  }

  double group_index_e(double lambda_um, double psi) const {
    return n_e(lambda_um, psi) - lambda_um * dn_e_dlambda(lambda_um, psi);
  }

  // Wave numbers (rad/m) as functions of angular frequency, used by the
  // finite-difference consistency checks.
  double k_o(double omega) const {
    const double lambda_um = kTwoPi * kSpeedOfLight / omega * 1e6;
    return omega / kSpeedOfLight * n_o(lambda_um);
  }
  double k_e(double omega, double psi) const {
    const double lambda_um = kTwoPi * kSpeedOfLight / omega * 1e6;
    return omega / kSpeedOfLight * n_e(lambda_um, psi);
  }
};

}  // namespace spdctomo
