#pragma once

#include <optional>

#include "hierint/penalty.hpp"

namespace hierint {

struct SolverConfig {
  int max_iterations = 5000;
  double primal_tol = 1e-8;  // relative to the iterate scale
  double dual_tol = 1e-8;
  double rho = 1.0;          // splitting step; adapted by residual balancing
  bool adapt_rho = true;
  bool restart = false;      // reset duals instead of rescaling them on a rho change
  bool trace_objective = true;
  // Entries with |theta_j| above this are reported as support. Unset means
  // 1e-6 * |theta|_inf, decided at exit.
  std::optional<double> support_threshold;
};

struct FitResult {
  Vec theta;
  double objective = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  SupportSet support;
  double support_threshold_used = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> objective_trace;  // per iteration when trace_objective
};

// Scale constants entering the theoretical penalty level. All nonnegative;
// delta in [0, 1], abs_const > 0.
struct TheoryConstants {
  double noise_psi2 = 1.0;   // sub-Gaussian scale of the noise
  double design_psi2 = 1.0;  // sub-Gaussian scale of the design rows
  double max_col_sd = 1.0;   // bound on the expanded-column standard deviations
  double delta = 0.5;
  double eta0 = 1.0;
  double abs_const = 1.0;

  void validate() const;
};

// sqrt((1+eta0)/abs_const) * noise_psi2 * max_col_sd * (1+delta)
//   * sqrt(log(p1)/n), natural log. The penalty level at which the noise
// correlation event holds with high probability.
double lambda_theory(int n, int p1, const TheoryConstants& tc);

// (1/2n)|y - Z theta|^2 + lambda * Pe(theta).
double objective_value(const Mat& z, const Vec& y, const Vec& theta, double lambda,
                       const PenaltySpec& spec, const InteractionIndex& idx);

// Minimizes objective_value by consensus splitting over the penalty atoms:
// each atom holds a local copy of its coordinates, a quadratic step restores
// consensus, and scaled duals close the loop. Requires lambda > 0.
FitResult fit(const Mat& z, const Vec& y, const InteractionIndex& idx, const PenaltySpec& spec,
              double lambda, const SolverConfig& cfg = {}, const Vec* warm_start = nullptr);

FitResult fit(const DesignMatrix& design, const Vec& y, const PenaltySpec& spec, double lambda,
              const SolverConfig& cfg = {}, const Vec* warm_start = nullptr);

// Fits a descending grid of penalty levels, warm-starting each from the
// previous solution. The grid must be positive and strictly decreasing.
std::vector<FitResult> lambda_path(const Mat& z, const Vec& y, const InteractionIndex& idx,
                                   const PenaltySpec& spec, const std::vector<double>& lambdas,
                                   const SolverConfig& cfg = {});

// log-spaced grid from |Z^T y / n|_inf down to ratio * that value.
std::vector<double> default_lambda_grid(const Mat& z, const Vec& y, int count, double ratio = 1e-3);

}  // namespace hierint
