#pragma once

// Small dense BFGS minimizer with a backtracking Armijo line search.
// Deterministic: no randomness, fixed evaluation order.

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace spdctomo {

struct BfgsOptions {
  int max_iterations = 10000;
  double gradient_tol = 1e-8;  // infinity norm
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// `f` returns the objective and writes the gradient into its second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline BfgsResult bfgs_minimize(const Objective& f, Eigen::VectorXd x,
                                const BfgsOptions& opt = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n), g_new(n), x_new(n);
  double fx = f(x, g);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);

  BfgsResult res;
  int stalls = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Line search failed along a quasi-Newton direction: retry once from
      // steepest descent, then give up.
      if (++stalls > 2) break;
      hinv.setIdentity();
      continue;
    }
    stalls = 0;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      if (it == 0) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
              rho * (hy * s.transpose() + s * hy.transpose());
    }
    x = x_new;
    g = g_new;
    fx = f_new;
    res.iterations = it + 1;
  }
  res.x = x;
  res.value = fx;
  res.gradient_norm = g.lpNorm<Eigen::Infinity>();
  if (res.gradient_norm < opt.gradient_tol) res.converged = true;
  return res;
}

}  // namespace spdctomo
