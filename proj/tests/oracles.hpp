#pragma once

// Reference implementations for the test suites, written directly from the
// mathematical definitions and kept independent of the library's solver and
// penalty code paths. Expected values frozen in the tests come from these or
// from hand arithmetic.

#include <cmath>
#include <functional>

#include "hierint/interaction.hpp"
#include "hierint/rng.hpp"

namespace oracle {

using hierint::Mat;
using hierint::Vec;

inline double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Cyclic coordinate descent for min (1/2n)||y - Z t||^2 + lambda ||t||_1.
// Exact coordinate minimization, swept until the largest coordinate move
// falls below tol.
inline Vec lasso_cd(const Mat& z, const Vec& y, double lambda, int max_sweeps = 100000,
                    double tol = 1e-13) {
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());
  Vec t = Vec::Zero(p);
  Vec r = y;
  Vec col_ms(p);
  for (int j = 0; j < p; ++j) col_ms[j] = z.col(j).squaredNorm() / n;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int j = 0; j < p; ++j) {
      if (col_ms[j] == 0.0) continue;
      double rho = z.col(j).dot(r) / n + col_ms[j] * t[j];
      double tj = soft(rho, lambda) / col_ms[j];
      double move = tj - t[j];
      if (move != 0.0) {
        r -= move * z.col(j);
        t[j] = tj;
        max_move = std::max(max_move, std::abs(move));
      }
    }
    if (max_move < tol) break;
  }
  return t;
}

inline double lasso_objective(const Mat& z, const Vec& y, const Vec& t, double lambda) {
  return (y - z * t).squaredNorm() / (2.0 * z.rows()) + lambda * t.cwiseAbs().sum();
}

inline Vec least_squares(const Mat& z, const Vec& y) {
  return z.colPivHouseholderQr().solve(y);
}

// Checks x against n_perturb random perturbations of norm <= radius: no
// perturbation may improve the objective by more than slack.
inline bool perturbation_optimal(const std::function<double(const Vec&)>& objective,
                                 const Vec& x, int n_perturb, double radius, double slack,
                                 hierint::Rng& rng) {
  const double fx = objective(x);
  Vec d(x.size());
  for (int t = 0; t < n_perturb; ++t) {
    for (int i = 0; i < d.size(); ++i) d[i] = rng.normal();
    double scale = radius * rng.uniform01() / std::max(d.norm(), 1e-300);
    if (objective(x + scale * d) < fx - slack) return false;
  }
  return true;
}

}  // namespace oracle
